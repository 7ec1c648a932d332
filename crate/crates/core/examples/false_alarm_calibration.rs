//! Monte Carlo check that the empirical false alarm rate matches the design
//! rate, and that the residual distance behaves like a chi-squared variable.
//!
//! ```text
//! cargo run --release --example false_alarm_calibration
//! ```

use ii_detect::experiment::{false_alarm_rate, residual_statistics};
use ii_detect::{reactor, DetectorDesign};

fn main() -> ii_detect::Result<()> {
    let model = reactor::model();
    let seeds: Vec<u64> = (0..10).collect();
    for rate in [0.1, 0.05, 0.01] {
        let r = false_alarm_rate(&model, rate, 50_000, &seeds, None)?;
        println!("A* = {rate:<5} alpha = {:.4}  empirical = {:.5} +- {:.5}", r.alpha, r.mean, r.stderr);
    }

    let design = DetectorDesign::new(&model, reactor::FALSE_ALARM_RATE)?;
    let s = residual_statistics(&model, &design, 50_000, 0, None)?;
    println!(
        "mean(z) = {:.3} (3), var(z) = {:.3} (6), residual lag-1 autocorrelation {:.4?}",
        s.mean_z, s.var_z, s.lag1_autocorr
    );
    Ok(())
}
