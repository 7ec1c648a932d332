//! Design the steady-state detector for the reactor and compare it with the
//! published gain under both covariance settings.
//!
//! ```text
//! cargo run --example design_detector
//! ```

use ii_detect::experiment::case_study_designs;
use ii_detect::{chi2_threshold, reactor, DetectorDesign};

fn main() -> ii_detect::Result<()> {
    let design = DetectorDesign::new(&reactor::model(), reactor::FALSE_ALARM_RATE)?;
    println!("Riccati converged in {} iterations, residual {:.2e}", design.riccati_iterations, design.riccati_residual);
    println!("L ={:.4}", design.gain);
    println!("Sigma ={:.4}", design.sigma);
    println!("alpha = {:.4} for A* = {}", design.alpha, design.false_alarm_rate);

    for rate in [0.5, 0.1, 0.05, 0.01] {
        println!("chi2 threshold, 3 dof, A* = {rate:<5} -> {:.4}", chi2_threshold(3, rate)?);
    }

    let both = case_study_designs()?;
    let (i, j) = both.gain_max_abs_diff_at;
    println!(
        "largest gap to the published gain: {:.4} at ({}, {})",
        both.gain_max_abs_diff,
        i + 1,
        j + 1
    );
    println!("gain with Sigma_t = Sigma_w = 0.001 I ={:.4}", both.stated_noise.gain);
    Ok(())
}
