//! Seeded, reproducible random streams.
//!
//! Every stochastic stage derives its stream from `(seed, stream labels)` via
//! SplitMix64 mixing, then draws from ChaCha12. Per-item streams make output
//! independent of generation order and of worker count.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// SplitMix64 mixing step.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with stream labels into one 64-bit stream seed.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    let mut state = seed;
    let mut out = splitmix64(&mut state);
    for &label in labels {
        state ^= label.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        out ^= splitmix64(&mut state);
    }
    out
}

/// Deterministic random stream with the handful of draws the pipeline needs.
pub struct Stream {
    inner: ChaCha12Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Stream for item `index` of stage `stage` under `seed`.
    pub fn for_item(seed: u64, stage: u64, index: u64) -> Self {
        Self::new(derive_seed(seed, &[stage, index]))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `[0, n)` without modulo bias.
    pub fn u64_below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let v = self.inner.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }

    /// Uniform integer in `[lo, hi]` inclusive.
    pub fn int_in(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        lo + self.u64_below(hi - lo + 1)
    }

    /// Uniform f64 in `[0, 1)` with 53-bit resolution.
    pub fn unit_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform f64 in `[lo, hi]`.
    pub fn f64_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit_f64()
    }

    pub fn bool_with_prob(&mut self, p: f64) -> bool {
        self.unit_f64() < p
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.u64_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Stream::new(42);
        let mut b = Stream::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn derive_separates_streams() {
        assert_ne!(derive_seed(1, &[0, 0]), derive_seed(1, &[0, 1]));
        assert_ne!(derive_seed(1, &[0, 0]), derive_seed(2, &[0, 0]));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
    }

    #[test]
    fn unit_f64_in_range() {
        let mut s = Stream::new(7);
        for _ in 0..10_000 {
            let v = s.unit_f64();
            assert!((0.0..1.0).contains(&v));
        }
    }

    #[test]
    fn int_in_covers_inclusive_range() {
        let mut s = Stream::new(9);
        let mut seen = [false; 4];
        for _ in 0..1000 {
            seen[(s.int_in(1, 3) - 1) as usize] = true;
        }
        assert_eq!(seen, [true, true, true, false]);
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut s = Stream::new(3);
        let mut v: Vec<u32> = (0..50).collect();
        s.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
    }
}
