//! Discrete-time stochastic LTI plant with additive anomalies:
//!
//! ```text
//! x_{k+1} = A x_k + B u_k + t_k + D delta_k
//! y_k     = C x_k + w_k + F delta_k
//! ```
//!
//! with `t_k ~ N(0, Sigma_t)`, `w_k ~ N(0, Sigma_w)` and `x_1 ~ N(mu_1, Sigma_1)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::numerics::{cholesky_factor, is_symmetric, serde_mat, Mat, Vector};
use crate::rng::{self, Stream, StreamId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    #[serde(with = "serde_mat")]
    pub a: Mat,
    #[serde(with = "serde_mat")]
    pub b: Mat,
    #[serde(with = "serde_mat")]
    pub c: Mat,
    #[serde(with = "serde_mat")]
    pub d: Mat,
    #[serde(with = "serde_mat")]
    pub f: Mat,
    #[serde(with = "serde_mat")]
    pub sigma_t: Mat,
    #[serde(with = "serde_mat")]
    pub sigma_w: Mat,
    #[serde(with = "serde_mat::vector")]
    pub mu1: Vector,
    #[serde(with = "serde_mat")]
    pub sigma1: Mat,
}

impl SystemModel {
    pub fn nx(&self) -> usize {
        self.a.nrows()
    }
    pub fn nu(&self) -> usize {
        self.b.ncols()
    }
    pub fn ny(&self) -> usize {
        self.c.nrows()
    }
    pub fn ndelta(&self) -> usize {
        self.d.ncols()
    }

    /// Checks mutual dimension consistency and that the covariances are symmetric.
    ///
    /// Positive definiteness is enforced where a factor is actually needed
    /// (plant sampling, detector design), since zero covariances are legal in
    /// deterministic runs.
    pub fn validate(&self) -> Result<()> {
        let (nx, nu, ny, nd) = (self.nx(), self.nu(), self.ny(), self.ndelta());
        let expect = |name: &str, m: &Mat, shape: (usize, usize)| -> Result<()> {
            if m.shape() == shape {
                Ok(())
            } else {
                Err(dims(format!("{name} is {:?}, expected {shape:?}", m.shape())))
            }
        };
        expect("A", &self.a, (nx, nx))?;
        expect("B", &self.b, (nx, nu))?;
        expect("C", &self.c, (ny, nx))?;
        expect("D", &self.d, (nx, nd))?;
        expect("F", &self.f, (ny, nd))?;
        expect("Sigma_t", &self.sigma_t, (nx, nx))?;
        expect("Sigma_w", &self.sigma_w, (ny, ny))?;
        expect("Sigma_1", &self.sigma1, (nx, nx))?;
        if self.mu1.len() != nx {
            return Err(dims(format!("mu1 has length {}, expected {nx}", self.mu1.len())));
        }
        for (name, m) in [
            ("Sigma_t", &self.sigma_t),
            ("Sigma_w", &self.sigma_w),
            ("Sigma_1", &self.sigma1),
        ] {
            if !is_symmetric(m, 1e-12) {
                return Err(Error::DomainError(format!("{name} is not symmetric")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SystemModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Cholesky factor for sampling; an all-zero covariance samples as zero.
fn noise_factor(m: &Mat, name: &'static str) -> Result<Mat> {
    if m.iter().all(|&v| v == 0.0) {
        Ok(Mat::zeros(m.nrows(), m.ncols()))
    } else {
        cholesky_factor(m, name)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnomalyProfile {
    #[default]
    None,
    /// `delta_k = value` for every `k >= onset`, zero before.
    Step {
        onset: u64,
        #[serde(with = "serde_mat::vector")]
        value: Vector,
    },
}

impl AnomalyProfile {
    pub fn at(&self, k: u64, ndelta: usize) -> Vector {
        match self {
            AnomalyProfile::Step { onset, value } if k >= *onset => value.clone(),
            _ => Vector::zeros(ndelta),
        }
    }

    pub fn is_active(&self, k: u64) -> bool {
        matches!(self, AnomalyProfile::Step { onset, .. } if k >= *onset)
    }
}

/// Whether the plant draws process, measurement and initial-state noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    #[default]
    Stochastic,
    /// All noises zero and `x_1 = mu_1`; used for exact assertions.
    Deterministic,
}

#[derive(Debug, Clone)]
pub struct Plant {
    model: SystemModel,
    k: u64,
    x: Vector,
    rng: Stream,
    noise: NoiseMode,
    t_factor: Mat,
    w_factor: Mat,
}

impl Plant {
    /// Samples `x_1 ~ N(mu_1, Sigma_1)` from the plant stream of `seed`; `k = 1`.
    pub fn new(model: &SystemModel, seed: u64, noise: NoiseMode) -> Result<Self> {
        model.validate()?;
        let mut rng = rng::stream(seed, StreamId::Plant);
        let (x, t_factor, w_factor) = match noise {
            NoiseMode::Deterministic => (
                model.mu1.clone(),
                Mat::zeros(model.nx(), model.nx()),
                Mat::zeros(model.ny(), model.ny()),
            ),
            NoiseMode::Stochastic => {
                let l1 = noise_factor(&model.sigma1, "Sigma_1")?;
                let x = rng::gaussian(&mut rng, &model.mu1, &l1);
                (
                    x,
                    noise_factor(&model.sigma_t, "Sigma_t")?,
                    noise_factor(&model.sigma_w, "Sigma_w")?,
                )
            }
        };
        Ok(Plant {
            model: model.clone(),
            k: 1,
            x,
            rng,
            noise,
            t_factor,
            w_factor,
        })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn state(&self) -> &Vector {
        &self.x
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    /// Emits `y_k` from the current state, then advances to `x_{k+1}`.
    pub fn step(&mut self, u: &Vector, delta: &Vector) -> Result<Vector> {
        let m = &self.model;
        if u.len() != m.nu() {
            return Err(dims(format!("u has length {}, expected {}", u.len(), m.nu())));
        }
        if delta.len() != m.ndelta() {
            return Err(dims(format!(
                "delta has length {}, expected {}",
                delta.len(),
                m.ndelta()
            )));
        }
        let (w, t) = match self.noise {
            NoiseMode::Deterministic => (Vector::zeros(m.ny()), Vector::zeros(m.nx())),
            NoiseMode::Stochastic => {
                let w = &self.w_factor * rng::standard_normal(&mut self.rng, m.ny());
                let t = &self.t_factor * rng::standard_normal(&mut self.rng, m.nx());
                (w, t)
            }
        };
        let y = &m.c * &self.x + w + &m.f * delta;
        self.x = &m.a * &self.x + &m.b * u + t + &m.d * delta;
        self.k += 1;
        Ok(y)
    }
}
