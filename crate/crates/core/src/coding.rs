//! User-side coding: key generation, affine encoding of measurements and
//! inputs, alarm decoding, and composition of the remote [`EncodedConfig`].
//!
//! Encodings are
//!
//! ```text
//! y~ = Pi1 y + N1 s1        u~ = Pi2 u + N2 s2        a~ = Pi4 a + Pi9 y~
//! ```
//!
//! where `N1`, `N2` span the kernels of `Pi1^L`, `Pi2^L` and `s1`, `s2` are
//! fresh Gaussian draws at every step, so the random terms vanish under the
//! left inverses while masking the transmitted signal.
//!
//! A [`KeySet`] is secret and must never leave the user side. Only the
//! [`EncodedConfig`] built from it is sent to the remote station.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detector::DetectorDesign;
use crate::error::{dims, Error, Result};
use crate::numerics::{kernel_basis, left_inverse, rank_ratio, serde_mat, symmetrize, Mat, Vector, RANK_TOL};
use crate::plant::SystemModel;
use crate::rng::{self, Stream, StreamId};
use crate::target::EncodedConfig;

const RANK_RETRIES: usize = 16;
const DECODE_TOL: f64 = 1e-6;

/// Dimensions of the encoded signals and of the immersed filter state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyDims {
    pub nx: usize,
    pub ny: usize,
    pub nu: usize,
    pub nr: usize,
    pub nz: usize,
    pub na: usize,
}

impl KeyDims {
    /// `nx~ = 8, ny~ = 4, nu~ = 4, na~ = 2`, with `nr~ = ny~` and `nz~ = 2`.
    pub const CASE_STUDY: KeyDims = KeyDims {
        nx: 8,
        ny: 4,
        nu: 4,
        nr: 4,
        nz: 2,
        na: 2,
    };

    /// Defaults for a plant of the given size: one extra dimension per signal.
    pub fn padded(nx: usize, ny: usize, nu: usize) -> Self {
        KeyDims {
            nx: nx + 1,
            ny: ny + 1,
            nu: nu + 1,
            nr: ny + 1,
            nz: 2,
            na: 2,
        }
    }

    pub fn validate(&self, nx: usize, ny: usize, nu: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::DimsInvalid(msg));
        if self.nx <= nx {
            return fail(format!("encoded state dim {} must exceed {nx}", self.nx));
        }
        if self.ny <= ny {
            return fail(format!("encoded output dim {} must exceed {ny}", self.ny));
        }
        if self.nu <= nu {
            return fail(format!("encoded input dim {} must exceed {nu}", self.nu));
        }
        if self.nr < self.ny {
            return fail(format!("encoded residual dim {} must be at least {}", self.nr, self.ny));
        }
        if self.nz <= 1 || self.na <= 1 {
            return fail(format!("encoded distance/alarm dims ({}, {}) must exceed 1", self.nz, self.na));
        }
        Ok(())
    }
}

impl std::str::FromStr for KeyDims {
    type Err = Error;

    /// Parses `nx,ny,nu,nr,nz,na`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Usage(format!("bad dims `{s}`: {e}")))?;
        match parts[..] {
            [nx, ny, nu, nr, nz, na] => Ok(KeyDims { nx, ny, nu, nr, nz, na }),
            _ => Err(Error::Usage(format!("dims `{s}` must have six comma-separated entries"))),
        }
    }
}

/// Mean and standard deviation of the i.i.d. Gaussian key-noise entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub mean: f64,
    pub std: f64,
}

impl NoiseParams {
    pub const ZERO: NoiseParams = NoiseParams { mean: 0.0, std: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyGenParams {
    /// Entry range for `Pi1`..`Pi4`, `Pi6`, `Pi7`.
    pub scale_small: f64,
    /// Entry range for `Pi8`, `Pi9`.
    pub scale_large: f64,
    pub noise_y: NoiseParams,
    pub noise_u: NoiseParams,
}

impl Default for KeyGenParams {
    fn default() -> Self {
        let noise = NoiseParams { mean: 1e3, std: 1e2 };
        KeyGenParams {
            scale_small: 0.1,
            scale_large: 100.0,
            noise_y: noise,
            noise_u: noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeySet {
    pub dims: KeyDims,
    #[serde(with = "serde_mat")]
    pub pi1: Mat,
    #[serde(with = "serde_mat")]
    pub pi2: Mat,
    #[serde(with = "serde_mat")]
    pub pi3: Mat,
    #[serde(with = "serde_mat")]
    pub pi4: Mat,
    #[serde(with = "serde_mat")]
    pub pi6: Mat,
    #[serde(with = "serde_mat")]
    pub pi7: Mat,
    #[serde(with = "serde_mat")]
    pub pi8: Mat,
    #[serde(with = "serde_mat")]
    pub pi9: Mat,
    #[serde(with = "serde_mat")]
    pub pi1_inv: Mat,
    #[serde(with = "serde_mat")]
    pub pi2_inv: Mat,
    #[serde(with = "serde_mat")]
    pub pi3_inv: Mat,
    #[serde(with = "serde_mat")]
    pub pi4_inv: Mat,
    #[serde(with = "serde_mat")]
    pub pi6_inv: Mat,
    #[serde(with = "serde_mat")]
    pub pi7_inv: Mat,
    #[serde(with = "serde_mat")]
    pub n1: Mat,
    #[serde(with = "serde_mat")]
    pub n2: Mat,
    pub noise_y: NoiseParams,
    pub noise_u: NoiseParams,
    pub seed: Option<u64>,
}

fn uniform(rng: &mut Stream, rows: usize, cols: usize, scale: f64) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.gen_range(-scale..=scale))
}

fn pad_identity(rows: usize, cols: usize) -> Mat {
    Mat::identity(rows, cols)
}

/// Outcome of checking every structural key invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyReport {
    /// Largest `|Pi_i^L Pi_i - I|` over i in {1, 2, 3, 4, 6, 7}.
    pub left_inverse_err: f64,
    /// Largest `|Pi_i^L N_i|` over i in {1, 2}.
    pub kernel_err: f64,
    /// Smallest `sigma_min / sigma_max` over every matrix that must be full rank.
    pub min_rank_ratio: f64,
}

impl KeyReport {
    pub fn passes(&self) -> bool {
        self.left_inverse_err <= 1e-9 && self.kernel_err <= 1e-10 && self.min_rank_ratio > RANK_TOL
    }
}

impl KeySet {
    /// Samples a key: `Pi1`..`Pi4`, `Pi6`, `Pi7` uniform in `[-scale_small, scale_small]`,
    /// `Pi8`, `Pi9` uniform in `[-scale_large, scale_large]`, resampling until every
    /// rank condition holds.
    pub fn generate(
        dims: KeyDims,
        model_dims: (usize, usize, usize),
        seed: u64,
        params: &KeyGenParams,
    ) -> Result<Self> {
        let (nx, ny, nu) = model_dims;
        dims.validate(nx, ny, nu)?;
        if !(params.scale_small > 0.0 && params.scale_large > 0.0) {
            return Err(Error::Usage("key scales must be positive".into()));
        }
        let mut rng = rng::stream(seed, StreamId::KeyGen);
        for _ in 0..RANK_RETRIES {
            let small = params.scale_small;
            let large = params.scale_large;
            let pi1 = uniform(&mut rng, dims.ny, ny, small);
            let pi2 = uniform(&mut rng, dims.nu, nu, small);
            let pi3 = uniform(&mut rng, dims.nx, nx, small);
            let pi4 = uniform(&mut rng, dims.na, 1, small);
            let pi6 = uniform(&mut rng, dims.nz, 1, small);
            let pi7 = uniform(&mut rng, dims.nr, dims.ny, small);
            let pi8 = uniform(&mut rng, dims.nz, dims.ny, large);
            let pi9 = uniform(&mut rng, dims.na, dims.ny, large);
            match Self::assemble(dims, [pi1, pi2, pi3, pi4, pi6, pi7, pi8, pi9], params, Some(seed)) {
                Ok(key) => return Ok(key),
                Err(Error::RankDeficient { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::RankRetryExhausted(RANK_RETRIES))
    }

    fn assemble(
        dims: KeyDims,
        [pi1, pi2, pi3, pi4, pi6, pi7, pi8, pi9]: [Mat; 8],
        params: &KeyGenParams,
        seed: Option<u64>,
    ) -> Result<Self> {
        for m in [&pi8, &pi9] {
            let ratio = rank_ratio(m);
            if ratio <= RANK_TOL {
                return Err(Error::RankDeficient { ratio });
            }
        }
        let pi1_inv = left_inverse(&pi1)?;
        let pi2_inv = left_inverse(&pi2)?;
        let n1 = kernel_basis(&pi1_inv)?;
        let n2 = kernel_basis(&pi2_inv)?;
        Ok(KeySet {
            dims,
            pi3_inv: left_inverse(&pi3)?,
            pi4_inv: left_inverse(&pi4)?,
            pi6_inv: left_inverse(&pi6)?,
            pi7_inv: left_inverse(&pi7)?,
            pi1,
            pi2,
            pi3,
            pi4,
            pi6,
            pi7,
            pi8,
            pi9,
            pi1_inv,
            pi2_inv,
            n1,
            n2,
            noise_y: params.noise_y,
            noise_u: params.noise_u,
            seed,
        })
    }

    /// Structured "coding off" key: every `Pi` is an identity block padded
    /// with zeros, `Pi8 = Pi9 = 0` and the key noise is zero. The encoded
    /// pipeline then reduces to the plaintext detector on zero-padded data.
    ///
    /// Test-only by intent: `Pi8`, `Pi9` are not full rank and nothing is hidden.
    pub fn identity_padding(dims: KeyDims, model_dims: (usize, usize, usize)) -> Result<Self> {
        let (nx, ny, nu) = model_dims;
        dims.validate(nx, ny, nu)?;
        let pi1 = pad_identity(dims.ny, ny);
        let pi2 = pad_identity(dims.nu, nu);
        let pi3 = pad_identity(dims.nx, nx);
        let pi4 = pad_identity(dims.na, 1);
        let pi6 = pad_identity(dims.nz, 1);
        let pi7 = pad_identity(dims.nr, dims.ny);
        let mut n1 = Mat::zeros(dims.ny, dims.ny - ny);
        n1.view_mut((ny, 0), (dims.ny - ny, dims.ny - ny)).fill_with_identity();
        let mut n2 = Mat::zeros(dims.nu, dims.nu - nu);
        n2.view_mut((nu, 0), (dims.nu - nu, dims.nu - nu)).fill_with_identity();
        Ok(KeySet {
            dims,
            pi1_inv: pi1.transpose(),
            pi2_inv: pi2.transpose(),
            pi3_inv: pi3.transpose(),
            pi4_inv: pi4.transpose(),
            pi6_inv: pi6.transpose(),
            pi7_inv: pi7.transpose(),
            pi1,
            pi2,
            pi3,
            pi4,
            pi6,
            pi7,
            pi8: Mat::zeros(dims.nz, dims.ny),
            pi9: Mat::zeros(dims.na, dims.ny),
            n1,
            n2,
            noise_y: NoiseParams::ZERO,
            noise_u: NoiseParams::ZERO,
            seed: None,
        })
    }

    pub fn report(&self) -> KeyReport {
        let pairs = [
            (&self.pi1_inv, &self.pi1),
            (&self.pi2_inv, &self.pi2),
            (&self.pi3_inv, &self.pi3),
            (&self.pi4_inv, &self.pi4),
            (&self.pi6_inv, &self.pi6),
            (&self.pi7_inv, &self.pi7),
        ];
        let left_inverse_err = pairs
            .iter()
            .map(|(li, m)| (*li * *m - Mat::identity(m.ncols(), m.ncols())).amax())
            .fold(0.0, f64::max);
        let kernel_err = (&self.pi1_inv * &self.n1)
            .amax()
            .max((&self.pi2_inv * &self.n2).amax());
        let min_rank_ratio = [
            &self.pi1, &self.pi2, &self.pi3, &self.pi4, &self.pi6, &self.pi7, &self.pi8, &self.pi9, &self.n1,
            &self.n2,
        ]
        .iter()
        .map(|m| rank_ratio(m))
        .fold(f64::INFINITY, f64::min);
        KeyReport {
            left_inverse_err,
            kernel_err,
            min_rank_ratio,
        }
    }

    fn draw_noise(rng: &mut Stream, basis: &Mat, p: NoiseParams) -> Vector {
        let s = rng::standard_normal(rng, basis.ncols()) * p.std + Vector::from_element(basis.ncols(), p.mean);
        basis * s
    }

    /// `y~ = Pi1 y + N1 s1` with a fresh `s1`.
    pub fn encode_y(&self, y: &Vector, rng: &mut Stream) -> Result<Encoded> {
        if y.len() != self.pi1.ncols() {
            return Err(dims(format!("y has length {}, expected {}", y.len(), self.pi1.ncols())));
        }
        let key_term = Self::draw_noise(rng, &self.n1, self.noise_y);
        Ok(Encoded {
            value: &self.pi1 * y + &key_term,
            key_term,
        })
    }

    /// `u~ = Pi2 u + N2 s2` with a fresh `s2`.
    pub fn encode_u(&self, u: &Vector, rng: &mut Stream) -> Result<Encoded> {
        if u.len() != self.pi2.ncols() {
            return Err(dims(format!("u has length {}, expected {}", u.len(), self.pi2.ncols())));
        }
        let key_term = Self::draw_noise(rng, &self.n2, self.noise_u);
        Ok(Encoded {
            value: &self.pi2 * u + &key_term,
            key_term,
        })
    }

    /// `a~ = Pi4 a + Pi9 y~`: the encoding the remote alarm map produces.
    pub fn encode_alarm(&self, alarm: bool, ytilde: &Vector) -> Vector {
        let a = if alarm { 1.0 } else { 0.0 };
        self.pi4.column(0) * a + &self.pi9 * ytilde
    }

    /// Unrounded decoder output `Pi4^L (a~ - Pi9 y~)`.
    pub fn decode_alarm_raw(&self, atilde: &Vector, ytilde: &Vector) -> Result<f64> {
        if atilde.len() != self.dims.na {
            return Err(dims(format!("a~ has length {}, expected {}", atilde.len(), self.dims.na)));
        }
        if ytilde.len() != self.dims.ny {
            return Err(dims(format!("y~ has length {}, expected {}", ytilde.len(), self.dims.ny)));
        }
        Ok((&self.pi4_inv * (atilde - &self.pi9 * ytilde))[(0, 0)])
    }

    /// Decodes an encoded alarm, rejecting values further than 1e-6 from 0 or 1.
    pub fn decode_alarm(&self, atilde: &Vector, ytilde: &Vector) -> Result<bool> {
        let raw = self.decode_alarm_raw(atilde, ytilde)?;
        if (raw - 1.0).abs() <= DECODE_TOL {
            Ok(true)
        } else if raw.abs() <= DECODE_TOL {
            Ok(false)
        } else {
            Err(Error::DecodeDrift { raw })
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// An encoded vector together with the one-time key term `N s` mixed into it.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub value: Vector,
    pub key_term: Vector,
}

/// Composes the matrices the remote station needs to run the target detector.
pub fn build_encoded_config(key: &KeySet, model: &SystemModel, design: &DetectorDesign) -> Result<EncodedConfig> {
    model.validate()?;
    let (nx, ny, nu) = (model.nx(), model.ny(), model.nu());
    if key.pi3.ncols() != nx || key.pi1.ncols() != ny || key.pi2.ncols() != nu {
        return Err(dims(format!(
            "key encodes (nx, ny, nu) = ({}, {}, {}), model has ({nx}, {ny}, {nu})",
            key.pi3.ncols(),
            key.pi1.ncols(),
            key.pi2.ncols()
        )));
    }
    if design.gain.shape() != (nx, ny) || design.sigma_inv.shape() != (ny, ny) {
        return Err(dims("detector design does not match the model"));
    }
    let closed_loop = &model.a - &design.gain * &model.c;
    let recover_r = &key.pi1_inv * &key.pi7_inv;
    let cfg = EncodedConfig {
        f1: &key.pi3 * closed_loop * &key.pi3_inv,
        f2: &key.pi3 * &model.b * &key.pi2_inv,
        f3: &key.pi3 * &design.gain * &key.pi1_inv,
        h1: key.pi7.clone(),
        h2: &key.pi7 * &key.pi1 * &model.c * &key.pi3_inv,
        w: symmetrize(&(recover_r.transpose() * &design.sigma_inv * &recover_r)),
        pi6: key.pi6.clone(),
        pi6_inv: key.pi6_inv.clone(),
        pi8: key.pi8.clone(),
        pi4: key.pi4.clone(),
        pi9: key.pi9.clone(),
        alpha: design.alpha,
        x0: &key.pi3 * &model.mu1,
    };
    cfg.validate()?;
    Ok(cfg)
}
