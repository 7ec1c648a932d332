//! Drive the plant, the plaintext detector and the remote target detector by
//! hand, step by step, and compare what each side sees.
//!
//! ```text
//! cargo run --example encoded_pipeline
//! ```

use ii_detect::coding::{build_encoded_config, KeyDims, KeyGenParams, KeySet};
use ii_detect::rng::{self, StreamId};
use ii_detect::{reactor, DetectorDesign, NoiseMode, Plant, StandardDetector, TargetDetector};

fn main() -> ii_detect::Result<()> {
    let seed = 3;
    let model = reactor::model();
    let design = DetectorDesign::new(&model, reactor::FALSE_ALARM_RATE)?;
    let key = KeySet::generate(KeyDims::CASE_STUDY, (4, 3, 3), seed, &KeyGenParams::default())?;
    let config = build_encoded_config(&key, &model, &design)?;

    let mut plant = Plant::new(&model, seed, NoiseMode::Stochastic)?;
    let mut plain = StandardDetector::new(&model, &design);
    let mut remote = TargetDetector::new(config);
    let mut enc = rng::stream(seed, StreamId::Encoding);
    let fault = reactor::fault_profile();

    println!("{:>3} {:>10} {:>10} {:>3} {:>3} {:>12}", "k", "z", "zeta", "a", "a^", "manifold");
    for k in 1..=30u64 {
        let u = reactor::reference_input(k, model.nu());
        let y = plant.step(&u, &fault.at(k, model.ndelta()))?;

        let immersed = &key.pi3 * plain.xhat();
        let manifold = (remote.state() - &immersed).norm();

        let p = plain.step(&u, &y)?;
        let yt = key.encode_y(&y, &mut enc)?;
        let ut = key.encode_u(&u, &mut enc)?;
        let t = remote.step(&ut.value, &yt.value)?;
        let ahat = key.decode_alarm(&t.atil, &yt.value)?;
        println!(
            "{k:>3} {:>10.4} {:>10.4} {:>3} {:>3} {:>12.2e}",
            p.z, t.zeta, p.alarm as u8, ahat as u8, manifold
        );
    }
    Ok(())
}
