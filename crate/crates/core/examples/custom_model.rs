//! Load a plant from JSON, design a detector for it and run the encoded
//! pipeline with keys sized to the model.
//!
//! ```text
//! cargo run --example custom_model -- [model.json]
//! ```
//!
//! Without an argument a small two-state model is written to the temp
//! directory first, which also shows the expected file layout.

use ii_detect::experiment::{simulate, ExperimentConfig, InputSignal, Mode};
use ii_detect::numerics::{Mat, Vector};
use ii_detect::{AnomalyProfile, KeyDims, KeyGenParams, NoiseMode, SystemModel};

fn toy() -> SystemModel {
    SystemModel {
        a: Mat::from_row_slice(2, 2, &[0.9, 0.1, 0.0, 0.7]),
        b: Mat::from_row_slice(2, 1, &[0.0, 1.0]),
        c: Mat::from_row_slice(1, 2, &[1.0, 0.0]),
        d: Mat::from_row_slice(2, 1, &[0.0, 1.0]),
        f: Mat::from_row_slice(1, 1, &[0.0]),
        sigma_t: Mat::identity(2, 2) * 0.05,
        sigma_w: Mat::identity(1, 1) * 0.02,
        mu1: Vector::zeros(2),
        sigma1: Mat::identity(2, 2) * 0.01,
    }
}

fn main() -> ii_detect::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            let p = std::env::temp_dir().join("ii-detect-toy-model.json");
            std::fs::write(&p, toy().to_json()?)?;
            println!("wrote {}", p.display());
            p
        }
    };
    let model = SystemModel::load(&path)?;
    let (nx, ny, nu) = (model.nx(), model.ny(), model.nu());
    let cfg = ExperimentConfig {
        false_alarm_rate: 0.05,
        horizon: 2_000,
        seed: 11,
        fault: AnomalyProfile::Step {
            onset: 1_000,
            value: Vector::from_element(model.ndelta(), 2.0),
        },
        key_dims: KeyDims::padded(nx, ny, nu),
        keygen: KeyGenParams::default(),
        noise: NoiseMode::Stochastic,
        input: InputSignal::Zero,
        mode: Mode::Local,
        model,
    };
    let out = simulate(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&out.summary)?);
    Ok(())
}
