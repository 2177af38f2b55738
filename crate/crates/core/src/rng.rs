//! Seeded random streams.
//!
//! Every random draw in the crate goes through [`seeded`], a ChaCha8 stream
//! keyed by a `u64`. ChaCha is counter-based and its output is fixed by the
//! `rand_chacha` 0.9 series, and normals come from `rand_distr` 0.5's
//! ziggurat sampler, so a seed reproduces the same instance on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut SeededRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn normal_vec(rng: &mut SeededRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| normal(rng)).collect()
}

/// Per-trial seed: `base ⊕ trial`, so parallel and serial runs draw identical instances.
#[inline]
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base ^ trial as u64
}
