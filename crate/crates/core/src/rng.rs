//! Seeded random stream shared by every stochastic algorithm.
//!
//! The generator is xoshiro256** with its 256-bit state filled from the
//! user seed by SplitMix64. Two derived draws are used:
//!
//! * `index(n)`: `((next_u64() as u128 * n as u128) >> 64) as usize`
//! * `unit()`: `(next_u64() >> 11) as f64 * 2^-53`, uniform on `[0, 1)`
//!
//! Both are fixed here so a run can be replayed from its seed alone.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: Xoshiro256StarStar,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform index in `0..n`. `n` must be non-zero.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi]`; returns `lo` exactly when the interval is a point.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.unit();
        if hi == lo {
            lo
        } else {
            lo + (hi - lo) * u
        }
    }
}

/// Seed of an independent sub-stream, used to keep initialization and
/// training draws apart. SplitMix64 finalizer applied to `seed` offset by the
/// stream index times the golden-ratio increment.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
