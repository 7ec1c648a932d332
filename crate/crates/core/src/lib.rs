//! Privacy-preserving remote anomaly detection.
//!
//! A plant owner (the *user*) wants a remote station to run a Kalman-filter
//! chi-squared anomaly detector without revealing its measurements, inputs or
//! alarms. The user maps every transmitted signal through a random affine
//! code into a higher-dimensional space, and the remote station runs a
//! *target* detector whose state is an immersed copy of the standard filter
//! state. The encoded alarm decodes to exactly the alarm the standard
//! detector would have raised.
//!
//! Module map:
//!
//! - [`numerics`]: matrix helpers, Riccati solver, incomplete gamma function.
//! - [`plant`]: stochastic LTI plant with additive faults.
//! - [`detector`]: standard detector design and plaintext execution.
//! - [`coding`]: user-side keys, encoders, alarm decoder, remote config builder.
//! - [`target`]: remote-side encoded detector.
//! - [`wire`]: binary framing, TCP server/client and an in-process loopback.
//! - [`experiment`], [`trace`]: lockstep simulations, Monte Carlo drivers, CSV traces.
//! - [`reactor`]: the chemical reactor case-study model.
//!
//! The runnable programs under `examples/` walk through each capability.

pub mod coding;
pub mod detector;
mod error;
pub mod experiment;
pub mod numerics;
pub mod plant;
pub mod reactor;
pub mod rng;
pub mod target;
pub mod trace;
pub mod wire;

pub use coding::{build_encoded_config, KeyDims, KeyGenParams, KeySet, NoiseParams};
pub use detector::{chi2_threshold, DetectorDesign, StandardDetector, StepDiag};
pub use error::{Error, Result};
pub use plant::{AnomalyProfile, NoiseMode, Plant, SystemModel};
pub use target::{EncodedConfig, TargetDetector, TargetDiag};
