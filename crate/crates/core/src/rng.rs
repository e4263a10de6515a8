//! Seeding and sampling primitives.
//!
//! Every random quantity in a simulation is drawn from a [`ChaCha8Rng`]
//! whose 256-bit seed is expanded from a 64-bit value with SplitMix64.
//! Both the mixing function and the samplers below are pinned here so
//! results reproduce bit-for-bit across platforms and dependency bumps.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `index` of an experiment with `master` seed.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master).wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Independent sub-streams of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Clock = 1,
    Contact = 2,
    Variates = 3,
    Inputs = 4,
}

/// Builds the generator for `stream` of the trial seeded with `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> SimRng {
    seeded_rng(seed ^ mix64(stream as u64).rotate_left(17))
}

pub fn seeded_rng(seed: u64) -> SimRng {
    let mut state = seed;
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN_GAMMA);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

/// Uniform in `[0, 1)` with 53 bits of precision.
pub fn uniform_closed_open<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `(0, 1]`; never returns zero, so `-ln(u)` is always finite.
pub fn uniform_open_closed<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    1.0 - uniform_closed_open(rng)
}

/// Uniform index in `0..n` by multiply-shift (no rejection loop).
pub fn uniform_index<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    debug_assert!(n > 0);
    ((u128::from(rng.next_u64()) * n as u128) >> 64) as usize
}

/// Exponential variate of the given rate by inverse CDF: `-ln(u) / rate`.
pub fn exp_variate<R: RngCore + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -uniform_open_closed(rng).ln() / rate
}

/// In-place Fisher-Yates shuffle driven by [`uniform_index`].
pub fn shuffle<T, R: RngCore + ?Sized>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = uniform_index(rng, i + 1);
        items.swap(i, j);
    }
}
