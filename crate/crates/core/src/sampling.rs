//! Seeded randomness.
//!
//! Every random quantity in the crate comes from a [`SeedSpec`]: a 64-bit
//! master seed plus a 64-bit stream id. The generator is ChaCha8 seeded from
//! `master_seed` with its stream counter set to `stream_id`, so distinct
//! streams of one master seed never overlap. Per-pair work takes its stream
//! from the pair, which keeps results independent of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Master seed and stream id; together they fix a random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    pub fn rng(&self) -> Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Same seed on another stream.
    pub fn with_stream(&self, stream_id: u64) -> Self {
        Self::new(self.master_seed, stream_id)
    }

    /// Sub-sequence keyed by `tag`, on the same stream. Used to give each
    /// predictor of a pair its own randomness.
    pub fn child(&self, tag: u64) -> Self {
        let key = splitmix64(tag ^ 0xA076_1D64_78BD_642F);
        Self::new(splitmix64(self.master_seed ^ key), self.stream_id)
    }
}

/// Stream id of the ordered pair `(i, j)`.
pub fn pair_stream(i: usize, j: usize) -> u64 {
    ((i as u64) << 32) | (j as u64 & 0xFFFF_FFFF)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A unit vector `θ ∈ S^{d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    theta: Vec<f64>,
}

impl Direction {
    /// Normalizes `v` onto the sphere. Fails on zero or non-finite input.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument(
                "direction must be a finite nonzero vector".into(),
            ));
        }
        Ok(Self {
            theta: v.into_iter().map(|x| x / norm).collect(),
        })
    }

    /// Standard basis vector `e_axis` in `d` dimensions.
    pub fn axis(d: usize, axis: usize) -> Self {
        let mut theta = vec![0.0; d];
        theta[axis] = 1.0;
        Self { theta }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.theta.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Draws from the uniform distribution on the sphere by normalizing a
    /// standard Gaussian vector.
    pub fn random(d: usize, rng: &mut Rng) -> Self {
        loop {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            if let Ok(dir) = Self::new(v) {
                return dir;
            }
        }
    }
}

/// `count` i.i.d. uniform directions in `d` dimensions.
pub fn sample_directions(d: usize, count: usize, seed: &SeedSpec) -> Result<Vec<Direction>> {
    if d == 0 || count == 0 {
        return Err(Error::InvalidArgument(format!(
            "need d >= 1 and L >= 1, got d={d}, L={count}"
        )));
    }
    let mut rng = seed.rng();
    Ok(sample_directions_with(d, count, &mut rng))
}

pub(crate) fn sample_directions_with(d: usize, count: usize, rng: &mut Rng) -> Vec<Direction> {
    (0..count).map(|_| Direction::random(d, rng)).collect()
}
