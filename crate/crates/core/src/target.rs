//! Remote-side encoded anomaly detector.
//!
//! This module only sees an [`EncodedConfig`] and encoded signals. It has no
//! access to the plant model, the filter gain, the residual covariance or
//! any individual coding matrix other than the ones the alarm map itself
//! needs (`Pi_4`, `Pi_6`, `Pi_8`, `Pi_9`).
//!
//! Per step, with `x'` the immersed filter state:
//!
//! ```text
//! r~  = H1 y~ - H2 x'
//! z~  = Pi6 (r~^T W r~) + Pi8 y~
//! zeta = Pi6^L (z~ - Pi8 y~)
//! a~  = Pi9 y~            if zeta <= alpha
//!     = Pi4 + Pi9 y~      otherwise
//! x'  <- F1 x' + F2 u~ + F3 y~
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{dims, Result};
use crate::numerics::{quad_form, serde_mat, Mat, Vector};

/// Composed matrices shipped to the remote station. Contains nothing from
/// which the plaintext model or detector design can be read off directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedConfig {
    /// `Pi3 (A - L C) Pi3^L`
    #[serde(with = "serde_mat")]
    pub f1: Mat,
    /// `Pi3 B Pi2^L`
    #[serde(with = "serde_mat")]
    pub f2: Mat,
    /// `Pi3 L Pi1^L`
    #[serde(with = "serde_mat")]
    pub f3: Mat,
    /// `Pi7`
    #[serde(with = "serde_mat")]
    pub h1: Mat,
    /// `Pi7 Pi1 C Pi3^L`
    #[serde(with = "serde_mat")]
    pub h2: Mat,
    /// `(Pi1^L Pi7^L)^T Sigma^-1 (Pi1^L Pi7^L)`
    #[serde(with = "serde_mat")]
    pub w: Mat,
    #[serde(with = "serde_mat")]
    pub pi6: Mat,
    #[serde(with = "serde_mat")]
    pub pi6_inv: Mat,
    #[serde(with = "serde_mat")]
    pub pi8: Mat,
    #[serde(with = "serde_mat")]
    pub pi4: Mat,
    #[serde(with = "serde_mat")]
    pub pi9: Mat,
    pub alpha: f64,
    /// Initial immersed state `Pi3 mu_1`.
    #[serde(with = "serde_mat::vector")]
    pub x0: Vector,
}

impl EncodedConfig {
    pub fn nx(&self) -> usize {
        self.f1.nrows()
    }
    pub fn nu(&self) -> usize {
        self.f2.ncols()
    }
    pub fn ny(&self) -> usize {
        self.f3.ncols()
    }
    pub fn nr(&self) -> usize {
        self.h1.nrows()
    }
    pub fn nz(&self) -> usize {
        self.pi6.nrows()
    }
    pub fn na(&self) -> usize {
        self.pi4.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (nx, nu, ny, nr, nz, na) = (self.nx(), self.nu(), self.ny(), self.nr(), self.nz(), self.na());
        let checks: [(&str, &Mat, (usize, usize)); 11] = [
            ("F1", &self.f1, (nx, nx)),
            ("F2", &self.f2, (nx, nu)),
            ("F3", &self.f3, (nx, ny)),
            ("H1", &self.h1, (nr, ny)),
            ("H2", &self.h2, (nr, nx)),
            ("W", &self.w, (nr, nr)),
            ("Pi6", &self.pi6, (nz, 1)),
            ("Pi6^L", &self.pi6_inv, (1, nz)),
            ("Pi8", &self.pi8, (nz, ny)),
            ("Pi4", &self.pi4, (na, 1)),
            ("Pi9", &self.pi9, (na, ny)),
        ];
        for (name, m, shape) in checks {
            if m.shape() != shape {
                return Err(dims(format!("{name} is {:?}, expected {shape:?}", m.shape())));
            }
        }
        if self.x0.len() != nx {
            return Err(dims(format!("x0 has length {}, expected {nx}", self.x0.len())));
        }
        if !self.alpha.is_finite() {
            return Err(crate::Error::DomainError("alpha must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetDiag {
    pub rtil: Vector,
    pub ztil: Vector,
    /// Distance recovered from `ztil`; equals the plaintext `z_k`.
    pub zeta: f64,
    pub atil: Vector,
}

#[derive(Debug, Clone)]
pub struct TargetDetector {
    config: EncodedConfig,
    xtil: Vector,
}

impl TargetDetector {
    /// Starts on the manifold: `x' = config.x0`.
    pub fn new(config: EncodedConfig) -> Self {
        let xtil = config.x0.clone();
        TargetDetector { config, xtil }
    }

    /// Starts from an arbitrary immersed state, e.g. to study off-manifold errors.
    pub fn with_state(config: EncodedConfig, xtil: Vector) -> Result<Self> {
        if xtil.len() != config.nx() {
            return Err(dims(format!("state has length {}, expected {}", xtil.len(), config.nx())));
        }
        Ok(TargetDetector { config, xtil })
    }

    pub fn config(&self) -> &EncodedConfig {
        &self.config
    }

    pub fn state(&self) -> &Vector {
        &self.xtil
    }

    pub fn step(&mut self, utilde: &Vector, ytilde: &Vector) -> Result<TargetDiag> {
        let cfg = &self.config;
        if utilde.len() != cfg.nu() {
            return Err(dims(format!("u~ has length {}, expected {}", utilde.len(), cfg.nu())));
        }
        if ytilde.len() != cfg.ny() {
            return Err(dims(format!("y~ has length {}, expected {}", ytilde.len(), cfg.ny())));
        }
        let rtil = &cfg.h1 * ytilde - &cfg.h2 * &self.xtil;
        let mask = &cfg.pi8 * ytilde;
        let ztil = &cfg.pi6 * quad_form(&rtil, &cfg.w) + &mask;
        let zeta = (&cfg.pi6_inv * (&ztil - &mask))[(0, 0)];
        let masked = &cfg.pi9 * ytilde;
        let atil = if zeta <= cfg.alpha {
            masked
        } else {
            cfg.pi4.column(0) + masked
        };
        self.xtil = &cfg.f1 * &self.xtil + &cfg.f2 * utilde + &cfg.f3 * ytilde;
        Ok(TargetDiag {
            rtil,
            ztil,
            zeta,
            atil,
        })
    }
}
