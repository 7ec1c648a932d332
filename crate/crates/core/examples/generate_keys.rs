//! Sample a secret key set, check its structure and round-trip it through a keyfile.
//!
//! The keyfile holds every coding matrix and must stay with the plant owner;
//! only the composed `EncodedConfig` is ever sent to the remote station.
//!
//! ```text
//! cargo run --example generate_keys -- [seed]
//! ```

use ii_detect::coding::{KeyDims, KeyGenParams, KeySet};
use ii_detect::numerics::Vector;
use ii_detect::rng::{self, StreamId};

fn main() -> ii_detect::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let key = KeySet::generate(KeyDims::CASE_STUDY, (4, 3, 3), seed, &KeyGenParams::default())?;
    let report = key.report();
    println!("key seed {seed}: {:?}", key.dims);
    println!(
        "|Pi^L Pi - I| = {:.1e}, |Pi^L N| = {:.1e}, min sigma ratio = {:.1e}, passes = {}",
        report.left_inverse_err,
        report.kernel_err,
        report.min_rank_ratio,
        report.passes()
    );

    let mut rng = rng::stream(seed, StreamId::Encoding);
    let y = Vector::from_vec(vec![6.94, 13.76, 1.0]);
    for _ in 0..3 {
        let enc = key.encode_y(&y, &mut rng)?;
        let back = &key.pi1_inv * &enc.value;
        println!("y~ = {:.3?}  decodes to {:.6?}", enc.value.as_slice(), back.as_slice());
    }

    let path = std::env::temp_dir().join(format!("ii-detect-key-{seed}.json"));
    key.save(&path)?;
    assert_eq!(KeySet::load(&path)?, key);
    println!("keyfile written to {} and reloaded", path.display());
    Ok(())
}
