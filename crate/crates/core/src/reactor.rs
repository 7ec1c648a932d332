//! Four-state chemical reactor used as the worked case study.
//!
//! States `(C0, T0, Tw, Tm)`, inputs `(Cu, Tu, Tw_u)`, outputs `(C0, T0, Tw)`.

use crate::numerics::{Mat, Vector};
use crate::plant::{AnomalyProfile, SystemModel};

/// Published state matrix.
pub fn a() -> Mat {
    Mat::from_row_slice(
        4,
        4,
        &[
            0.8353, 0.0, 0.0, 0.0, //
            0.0, 0.8324, 0.0, 0.0031, //
            0.0, 0.0001, 0.1633, 0.0, //
            0.0, 0.0280, 0.0172, 0.9320,
        ],
    )
}

pub fn b() -> Mat {
    Mat::from_row_slice(
        4,
        3,
        &[
            0.0458, 0.0, 0.0, //
            0.0, 0.0457, 0.0, //
            0.0, 0.0, 0.0231, //
            0.0, 0.0007, 0.0006,
        ],
    )
}

pub fn c() -> Mat {
    Mat::from_row_slice(3, 4, &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0.])
}

pub fn d() -> Mat {
    Mat::from_row_slice(4, 1, &[1.0, 2.0, 3.0, 4.0])
}

pub fn f() -> Mat {
    Mat::from_row_slice(3, 1, &[1.0, 2.0, 3.0])
}

/// Published filter gain.
pub fn printed_gain() -> Mat {
    Mat::from_row_slice(
        4,
        3,
        &[
            0.8271, 0.0, 0.0, //
            0.0, 0.8243, 0.0002, //
            0.0, 0.0002, 0.1619, //
            0.0, 0.0481, 0.0543,
        ],
    )
}

/// Published residual covariance.
pub fn printed_residual_cov() -> Mat {
    Mat::from_row_slice(
        3,
        3,
        &[
            1.0169, 0.0, 0.0, //
            0.0, 1.0169, 0.0001, //
            0.0, 0.0001, 1.0105,
        ],
    )
}

pub const FALSE_ALARM_RATE: f64 = 0.1;
pub const PRINTED_THRESHOLD: f64 = 6.2514;
pub const FAULT_VALUE: f64 = 0.9;
pub const FAULT_ONSET: u64 = 20;

fn with_covariances(q: f64, r: f64) -> SystemModel {
    SystemModel {
        a: a(),
        b: b(),
        c: c(),
        d: d(),
        f: f(),
        sigma_t: Mat::identity(4, 4) * q,
        sigma_w: Mat::identity(3, 3) * r,
        mu1: Vector::from_vec(vec![6.94, 13.76, 1.0, 1.0]),
        sigma1: Mat::identity(4, 4) * 0.001,
    }
}

/// Reactor with the stated noise covariances `Sigma_t = Sigma_w = 0.001 I`.
pub fn model_stated_noise() -> SystemModel {
    with_covariances(0.001, 0.001)
}

/// Reactor with `Sigma_t = I`, `Sigma_w = 0.01 I`, the covariances under
/// which the Riccati solution reproduces the published gain and residual covariance.
pub fn model() -> SystemModel {
    with_covariances(1.0, 0.01)
}

/// Reference input `u_k = 50 cos(0.5 k)^2`, broadcast to every input channel.
pub fn reference_input(k: u64, nu: usize) -> Vector {
    let v = 50.0 * (0.5 * k as f64).cos().powi(2);
    Vector::from_element(nu, v)
}

/// Step fault of 0.9 from `k = 20` inclusive.
pub fn fault_profile() -> AnomalyProfile {
    AnomalyProfile::Step {
        onset: FAULT_ONSET,
        value: Vector::from_element(1, FAULT_VALUE),
    }
}
