//! Seeded random streams.
//!
//! Every consumer draws from its own ChaCha stream derived from one user
//! seed, so plant noise, key sampling and encoding noise never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numerics::{Mat, Vector};

pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamId {
    Plant = 1,
    KeyGen = 2,
    Encoding = 3,
}

pub fn stream(seed: u64, id: StreamId) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng
}

pub fn standard_normal(rng: &mut Stream, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Draws `mean + factor * z` with `z` standard normal.
pub fn gaussian(rng: &mut Stream, mean: &Vector, factor: &Mat) -> Vector {
    mean + factor * standard_normal(rng, factor.ncols())
}
