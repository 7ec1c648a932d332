use serde::{Deserialize, Serialize};

use super::linalg::symmetrize;
use super::Mat;
use crate::error::{dims, Error, Result};

pub const DARE_TOL: f64 = 1e-12;
pub const DARE_MAX_ITER: usize = 100_000;

/// Stabilizing solution of the filtering Riccati equation
/// `P = A P A^T + Q - A P C^T (R + C P C^T)^-1 C P A^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiccatiSolution {
    #[serde(with = "super::serde_mat")]
    pub p: Mat,
    pub iterations: usize,
    pub residual_norm: f64,
}

fn check_dims(a: &Mat, c: &Mat, q: &Mat, r: &Mat) -> Result<()> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(dims(format!("A must be square, got {:?}", a.shape())));
    }
    if c.ncols() != n {
        return Err(dims(format!("C has {} columns, expected {n}", c.ncols())));
    }
    if q.shape() != (n, n) {
        return Err(dims(format!("Q is {:?}, expected ({n}, {n})", q.shape())));
    }
    let m = c.nrows();
    if r.shape() != (m, m) {
        return Err(dims(format!("R is {:?}, expected ({m}, {m})", r.shape())));
    }
    Ok(())
}

fn riccati_map(a: &Mat, c: &Mat, q: &Mat, r: &Mat, p: &Mat) -> Result<Mat> {
    let apct = a * p * c.transpose();
    let s = r + c * p * c.transpose();
    let s_inv = s
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or(Error::SingularInnovationCovariance)?;
    Ok(a * p * a.transpose() + q - &apct * s_inv * apct.transpose())
}

/// Frobenius norm of the Riccati equation residual at `p`.
pub fn dare_residual(a: &Mat, c: &Mat, q: &Mat, r: &Mat, p: &Mat) -> Result<f64> {
    check_dims(a, c, q, r)?;
    Ok((riccati_map(a, c, q, r, p)? - p).norm())
}

/// Fixed-point iteration of the Riccati recursion from `P0 = Q`.
///
/// Stops once successive iterates differ by at most `tol` in Frobenius norm;
/// that difference is exactly the equation residual at the previous iterate.
pub fn dare_solve(a: &Mat, c: &Mat, q: &Mat, r: &Mat, tol: f64, max_iter: usize) -> Result<RiccatiSolution> {
    check_dims(a, c, q, r)?;
    let mut p = symmetrize(q);
    let mut last_step = f64::INFINITY;
    for it in 1..=max_iter {
        let next = symmetrize(&riccati_map(a, c, q, r, &p)?);
        last_step = (&next - &p).norm();
        if !last_step.is_finite() {
            break;
        }
        p = next;
        if last_step <= tol {
            let residual_norm = (riccati_map(a, c, q, r, &p)? - &p).norm();
            return Ok(RiccatiSolution {
                p,
                iterations: it,
                residual_norm,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_step,
    })
}

/// One-step-ahead predictor gain `L = A P C^T (R + C P C^T)^-1`.
pub fn kalman_gain(a: &Mat, c: &Mat, p: &Mat, r: &Mat) -> Result<Mat> {
    check_dims(a, c, p, r)?;
    let s = r + c * p * c.transpose();
    let s_inv = s
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or(Error::SingularInnovationCovariance)?;
    Ok(a * p * c.transpose() * s_inv)
}
