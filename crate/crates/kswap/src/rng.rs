//! Seeded randomness helpers.
//!
//! All randomness flows through ChaCha8 streams seeded from u64, with in-house
//! rejection sampling over integer ranges. Reruns with the same seeds are
//! byte-identical on every platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 step; used to derive independent sub-seeds in counter mode.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d49d35bc0bbdbc);
    z ^ (z >> 31)
}

/// Deterministic sub-seed for trial `trial` of cell `cell` under `master`.
pub fn derive_seed(master: u64, cell: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(master ^ cell.wrapping_mul(0xa076_1d64_78bd_642f)) ^ trial)
}

/// Uniform draw from {0, 1, ..., n-1} by bitmask rejection.
/// Power-of-two ranges consume exactly one 64-bit draw.
pub fn uniform_below(rng: &mut Rng, n: u64) -> u64 {
    assert!(n > 0, "empty range");
    let mask = n.next_power_of_two().wrapping_sub(1) | (n - 1);
    loop {
        let x = rng.next_u64() & mask;
        if x < n {
            return x;
        }
    }
}

/// Uniform draw from {lo, ..., hi} inclusive (i128 domain, width must fit u64).
pub fn uniform_in_range(rng: &mut Rng, lo: i128, hi: i128) -> i128 {
    assert!(lo <= hi, "empty range");
    let width = (hi - lo + 1) as u128;
    assert!(width <= u64::MAX as u128, "range too wide");
    lo + uniform_below(rng, width as u64) as i128
}
