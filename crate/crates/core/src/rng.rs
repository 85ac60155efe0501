//! Seeded uniform streams.
//!
//! Every generator in the crate draws its randomness from an [`RngStream`].
//! A stream is a ChaCha8 keystream keyed by a 64-bit seed; disjoint streams
//! for parallel workers come from [`RngStream::substream`], which selects a
//! different ChaCha stream id under the same key.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent stream `index` under the same seed. Index 0 of the
    /// substreams is distinct from the root stream returned by [`RngStream::new`].
    pub fn substream(seed: u64, index: u64) -> Self {
        Self::with_stream(seed, index.wrapping_add(1))
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Uniform variate strictly inside (0, 1).
    ///
    /// Uses the top 53 bits of a 64-bit word, centred in its cell, so neither
    /// endpoint can occur and `1 - u` is exactly representable for `u >= 0.5`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn fill_uniform(&mut self, out: &mut [f64]) {
        for slot in out.iter_mut() {
            *slot = self.uniform();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        for _ in 0..1000 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn substreams_differ() {
        let mut root = RngStream::new(7);
        let mut s0 = RngStream::substream(7, 0);
        let mut s1 = RngStream::substream(7, 1);
        let a: Vec<f64> = (0..8).map(|_| root.uniform()).collect();
        let b: Vec<f64> = (0..8).map(|_| s0.uniform()).collect();
        let c: Vec<f64> = (0..8).map(|_| s1.uniform()).collect();
        assert_ne!(a, b);
        assert_ne!(b, c);
    }

    #[test]
    fn open_unit_interval() {
        let mut s = RngStream::new(0);
        for _ in 0..100_000 {
            let u = s.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn mean_is_one_half() {
        let mut s = RngStream::new(3);
        let n = 200_000;
        let mean = (0..n).map(|_| s.uniform()).sum::<f64>() / n as f64;
        // sd of the mean is 1/sqrt(12 n) ~ 6.5e-4
        assert!((mean - 0.5).abs() < 4e-3);
    }
}
