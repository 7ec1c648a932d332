//! Reproduce the reactor case study: a 0.9 step fault from k = 20, encoded
//! detection on a random key, and the artifacts for plotting.
//!
//! ```text
//! cargo run --example reactor_case_study -- [out_dir]
//! python3 crates/core/scripts/plot_trace.py casestudy/trace.csv
//! ```

use ii_detect::experiment::{case_study, Mode};

fn main() -> ii_detect::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "casestudy".into());
    let cs = case_study(0, 200, Mode::Local)?;
    cs.write_artifacts(&out)?;

    let s = &cs.run.summary;
    println!("alpha = {:.4}", s.alpha);
    println!("pre-fault alarm rate  = {:.3}", s.far_pre_fault.unwrap_or(f64::NAN));
    println!("post-fault alarm rate = {:.3}", s.detection_rate_post_fault.unwrap_or(f64::NAN));
    println!("decoded alarm mismatches = {}, boundary steps = {}", s.alarm_mismatches, s.boundary_steps);
    println!(
        "y: {} -> {} dims, a: 1 -> {} dims (u broadcast to all channels: {})",
        cs.run.design.ny,
        cs.run.config.ny(),
        cs.run.config.na(),
        s.input_broadcast
    );
    for r in cs.run.records.iter().filter(|r| (17..=23).contains(&r.k)) {
        println!(
            "k = {:>2}  z = {:>8.3}  a = {}  a~ = {:>10.3?}  a^ = {}",
            r.k,
            r.z,
            r.a as u8,
            r.atilde.as_slice(),
            r.ahat as u8
        );
    }
    println!("artifacts in {out}/");
    Ok(())
}
