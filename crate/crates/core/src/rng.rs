//! Deterministic, splittable randomness.
//!
//! Every stochastic routine in this crate draws from a [`SplitRng`]. Child
//! streams are derived from the parent's seed and a label, never from the
//! parent's position in its own stream, so call sites cannot perturb each
//! other's draws: `rng.child("holdout")` yields the same stream for a given
//! root seed no matter what was sampled before it.
//!
//! Gaussian variates use pairwise Box-Muller in coordinate order. Each pair
//! of output slots consumes exactly two uniforms; for an odd slot count the
//! final pair's sine component is discarded. This fixes the draw sequence so
//! runs are bit-reproducible for a given seed.

use crate::fmath;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

fn mix(seed: u64, salt: u64) -> u64 {
    splitmix(seed ^ splitmix(salt.wrapping_add(GOLDEN_GAMMA)))
}

/// Seeded ChaCha8 stream with label-based splitting.
#[derive(Debug, Clone)]
pub struct SplitRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SplitRng {
    pub fn new(seed: u64) -> Self {
        SplitRng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream identified by a label. Depends only on the
    /// parent's seed and the label, not on how much the parent has drawn.
    pub fn child(&self, label: &str) -> SplitRng {
        SplitRng::new(mix(self.seed, fnv1a(label.as_bytes())))
    }

    /// Child stream for the `index`-th item of a labeled collection.
    pub fn child_indexed(&self, label: &str, index: u64) -> SplitRng {
        SplitRng::new(mix(mix(self.seed, fnv1a(label.as_bytes())), index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in 0..n, unbiased via rejection from a power of two.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0, "next_index requires n > 0");
        let n64 = n as u64;
        let mask = n64.next_power_of_two().wrapping_sub(1);
        loop {
            let v = self.inner.next_u64() & mask;
            if v < n64 {
                return v as usize;
            }
        }
    }

    /// Bernoulli(p) draw; consumes exactly one uniform.
    pub fn next_bool(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Fills `out` with independent standard normal variates (Box-Muller,
    /// pairwise in index order).
    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        let mut i = 0;
        while i < out.len() {
            // 1 - u keeps the argument of ln strictly positive.
            let u1 = 1.0 - self.next_f64();
            let u2 = self.next_f64();
            let r = fmath::sqrt(-2.0 * fmath::ln(u1));
            let phi = core::f64::consts::TAU * u2;
            out[i] = r * fmath::cos(phi);
            if i + 1 < out.len() {
                out[i + 1] = r * fmath::sin(phi);
            }
            i += 2;
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        let mut one = [0.0];
        self.fill_standard_normal(&mut one);
        one[0]
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_index(i + 1);
            items.swap(i, j);
        }
    }
}
