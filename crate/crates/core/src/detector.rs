//! Standard (plaintext) Kalman-filter chi-squared anomaly detector.
//!
//! Design computes the steady-state one-step-ahead predictor gain, the residual
//! covariance and the threshold for a target false alarm rate. At run time
//!
//! ```text
//! r_k     = y_k - C xhat_k
//! z_k     = r_k^T Sigma^-1 r_k
//! a_k     = 1 if z_k > alpha else 0
//! xhat_k+1 = A xhat_k + B u_k + L r_k
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::numerics::{
    cholesky_factor, dare_solve, gamma_p_inv, kalman_gain, quad_form, serde_mat, symmetrize, Mat,
    Vector, DARE_MAX_ITER, DARE_TOL,
};
use crate::plant::SystemModel;

/// Chi-squared threshold `2 P^-1(ny/2, 1 - A*)` for a target false alarm rate `A*`.
pub fn chi2_threshold(ny: usize, false_alarm_rate: f64) -> Result<f64> {
    if !(false_alarm_rate > 0.0 && false_alarm_rate < 1.0) {
        return Err(Error::Usage(format!(
            "false alarm rate must lie in (0, 1), got {false_alarm_rate}"
        )));
    }
    if ny == 0 {
        return Err(dims("detector needs at least one output"));
    }
    Ok(2.0 * gamma_p_inv(ny as f64 / 2.0, 1.0 - false_alarm_rate)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorDesign {
    #[serde(with = "serde_mat")]
    pub gain: Mat,
    #[serde(with = "serde_mat")]
    pub p: Mat,
    #[serde(with = "serde_mat")]
    pub sigma: Mat,
    #[serde(with = "serde_mat")]
    pub sigma_inv: Mat,
    pub alpha: f64,
    pub false_alarm_rate: f64,
    pub ny: usize,
    pub riccati_iterations: usize,
    pub riccati_residual: f64,
}

impl DetectorDesign {
    pub fn new(model: &SystemModel, false_alarm_rate: f64) -> Result<Self> {
        model.validate()?;
        let alpha = chi2_threshold(model.ny(), false_alarm_rate)?;
        let sol = dare_solve(
            &model.a,
            &model.c,
            &model.sigma_t,
            &model.sigma_w,
            DARE_TOL,
            DARE_MAX_ITER,
        )?;
        let gain = kalman_gain(&model.a, &model.c, &sol.p, &model.sigma_w)?;
        let sigma = symmetrize(&(&model.c * &sol.p * model.c.transpose() + &model.sigma_w));
        let chol = cholesky_factor(&sigma, "Sigma")?;
        let l_inv = chol
            .solve_lower_triangular(&Mat::identity(sigma.nrows(), sigma.nrows()))
            .ok_or(Error::NotPositiveDefinite("Sigma"))?;
        let sigma_inv = symmetrize(&(l_inv.transpose() * l_inv));
        Ok(DetectorDesign {
            gain,
            p: sol.p,
            sigma,
            sigma_inv,
            alpha,
            false_alarm_rate,
            ny: model.ny(),
            riccati_iterations: sol.iterations,
            riccati_residual: sol.residual_norm,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiag {
    pub r: Vector,
    pub z: f64,
    pub alarm: bool,
}

#[derive(Debug, Clone)]
pub struct StandardDetector {
    /// `A - L C`
    closed_loop: Mat,
    b: Mat,
    c: Mat,
    gain: Mat,
    sigma_inv: Mat,
    alpha: f64,
    xhat: Vector,
}

impl StandardDetector {
    /// Starts the filter at `xhat_1 = E[x_1] = mu_1`.
    pub fn new(model: &SystemModel, design: &DetectorDesign) -> Self {
        StandardDetector {
            closed_loop: &model.a - &design.gain * &model.c,
            b: model.b.clone(),
            c: model.c.clone(),
            gain: design.gain.clone(),
            sigma_inv: design.sigma_inv.clone(),
            alpha: design.alpha,
            xhat: model.mu1.clone(),
        }
    }

    pub fn with_threshold(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn xhat(&self) -> &Vector {
        &self.xhat
    }

    pub fn step(&mut self, u: &Vector, y: &Vector) -> Result<StepDiag> {
        if u.len() != self.b.ncols() {
            return Err(dims(format!("u has length {}, expected {}", u.len(), self.b.ncols())));
        }
        if y.len() != self.c.nrows() {
            return Err(dims(format!("y has length {}, expected {}", y.len(), self.c.nrows())));
        }
        let r = y - &self.c * &self.xhat;
        let z = quad_form(&r, &self.sigma_inv);
        let alarm = z > self.alpha;
        // Same as A xhat + B u + L r, evaluated in the order the target detector uses.
        self.xhat = &self.closed_loop * &self.xhat + &self.b * u + &self.gain * y;
        Ok(StepDiag { r, z, alarm })
    }
}
