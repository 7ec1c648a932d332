//! Run the remote target detector behind a TCP server and talk to it from a
//! user session that holds the key.
//!
//! ```text
//! cargo run --example networked_session
//! ```
//!
//! The same split runs across processes with `iidetect serve` and
//! `iidetect client --addr HOST:PORT`.

use ii_detect::coding::{build_encoded_config, KeyDims, KeyGenParams, KeySet};
use ii_detect::wire::{Server, TcpTransport, UserSession};
use ii_detect::{reactor, DetectorDesign, NoiseMode, Plant, StandardDetector};

fn main() -> ii_detect::Result<()> {
    let server = Server::bind("127.0.0.1:0")?.spawn()?;
    println!("target detector listening on {}", server.addr());

    let seed = 5;
    let model = reactor::model();
    let design = DetectorDesign::new(&model, reactor::FALSE_ALARM_RATE)?;
    let key = KeySet::generate(KeyDims::CASE_STUDY, (4, 3, 3), seed, &KeyGenParams::default())?;
    let config = build_encoded_config(&key, &model, &design)?;

    let mut session = UserSession::open(TcpTransport::connect(server.addr())?, key, &config, seed)?;
    let mut plant = Plant::new(&model, seed, NoiseMode::Stochastic)?;
    let mut plain = StandardDetector::new(&model, &design);
    let fault = reactor::fault_profile();
    let mut agree = 0;
    let horizon = 100u64;
    for k in 1..=horizon {
        let u = reactor::reference_input(k, model.nu());
        let y = plant.step(&u, &fault.at(k, model.ndelta()))?;
        let step = session.step(&u, &y)?;
        let local = plain.step(&u, &y)?;
        agree += (step.alarm == local.alarm) as u32;
        if k % 10 == 0 {
            println!(
                "k = {:>3}  sent y~ = {:>9.2?}  got a~ = {:>9.2?}  decoded {}",
                step.k,
                step.ytilde.value.as_slice(),
                step.atilde.as_slice(),
                step.alarm as u8
            );
        }
    }
    session.close()?;
    println!("{agree}/{horizon} decoded alarms agree with the local detector");
    server.shutdown();
    Ok(())
}
