//! Per-trial random streams.
//!
//! Every trial owns an independent generator whose seed is a stateless
//! function of `(master_seed, trial_index)`, so results never depend on
//! which worker ran which trial.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type TrialRng = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `index` under `master`.
#[inline]
pub fn trial_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master ^ GOLDEN).wrapping_add(index.wrapping_mul(GOLDEN)))
}

pub fn trial_rng(master: u64, index: u64) -> TrialRng {
    Xoshiro256PlusPlus::seed_from_u64(trial_seed(master, index))
}

/// Derive an auxiliary stream (bootstrap, etc.) that never collides with
/// trial streams of the same master seed.
pub fn aux_rng(master: u64, purpose: u64) -> TrialRng {
    Xoshiro256PlusPlus::seed_from_u64(mix64(master.rotate_left(29) ^ mix64(purpose ^ !GOLDEN)))
}
