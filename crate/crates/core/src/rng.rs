//! Seeded random numbers for the simulations.
//!
//! The generator is xoshiro256++, with its 256-bit state filled from a 64-bit
//! seed by SplitMix64. Floats are drawn as `(next_u64 >> 11) · 2⁻⁵³`.
//! Replica `r` of a run with base seed `s` uses seed
//! `s XOR (r · 0x9E3779B97F4A7C15)` (wrapping).

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub const PRNG_NAME: &str = "xoshiro256++/splitmix64";

pub const REPLICA_SEED_MULTIPLIER: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed for replica `index` of a run with `base` seed.
pub fn replica_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64).wrapping_mul(REPLICA_SEED_MULTIPLIER)
}

#[derive(Debug, Clone)]
pub struct SimRng(Xoshiro256PlusPlus);

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Fills `out` with independent fair signs `±1`, one bit each, taken
    /// least-significant first from fresh 64-bit words. Unused bits of the
    /// last word are discarded.
    pub fn fair_signs(&mut self, out: &mut [f64]) {
        for chunk in out.chunks_mut(64) {
            let mut word = self.next_u64();
            for x in chunk {
                *x = if word & 1 == 1 { 1.0 } else { -1.0 };
                word >>= 1;
            }
        }
    }

    /// Index drawn from a discrete distribution by inversion.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}
