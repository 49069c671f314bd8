use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{arg_err, Result};

/// Seeded deterministic generator.
///
/// Backed by ChaCha8 (256-bit key derived from the 64-bit seed, 64-bit block
/// counter). The stream for a given seed is identical on every platform.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One draw from `[a, b)`.
    pub fn uniform_one(&mut self, a: f64, b: f64) -> f64 {
        loop {
            // 53 random mantissa bits give a value in [0, 1)
            let unit = (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            let v = a + (b - a) * unit;
            // rounding can land exactly on b for very narrow intervals
            if v < b {
                return v;
            }
        }
    }

    pub fn uniform(&mut self, a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return arg_err(format!("uniform bounds must satisfy a < b, got [{a}, {b})"));
        }
        Ok((0..n).map(|_| self.uniform_one(a, b)).collect())
    }

    pub fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.inner);
        mean + std_dev * z
    }

    /// Uniform index in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Fisher-Yates shuffle driven by this stream.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a = Rng::new(42).uniform(0.0, 1.0, 64).unwrap();
        let b = Rng::new(42).uniform(0.0, 1.0, 64).unwrap();
        assert_eq!(a, b);
        let c = Rng::new(43).uniform(0.0, 1.0, 64).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mean_of_unit_uniform() {
        let xs = Rng::new(7).uniform(0.0, 1.0, 100_000).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
        assert!(xs.iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn narrow_range_stays_half_open() {
        let eps = 1e-12;
        let xs = Rng::new(1).uniform(5.0, 5.0 + eps, 10_000).unwrap();
        assert!(xs.iter().all(|&x| x >= 5.0 && x < 5.0 + eps));
    }

    #[test]
    fn rejects_empty_interval() {
        assert!(Rng::new(0).uniform(1.0, 1.0, 3).is_err());
        assert!(Rng::new(0).uniform(2.0, 1.0, 3).is_err());
        assert!(Rng::new(0).uniform(f64::NAN, 1.0, 3).is_err());
    }

    #[test]
    fn shuffle_is_a_deterministic_permutation() {
        let mut a: Vec<usize> = (0..50).collect();
        let mut b = a.clone();
        Rng::new(9).shuffle(&mut a);
        Rng::new(9).shuffle(&mut b);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(a, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn stream_is_pinned() {
        // Frozen from the first run; guards against a silent generator change.
        let xs = Rng::new(42).uniform(0.0, 1.0, 3).unwrap();
        assert_eq!(xs, FROZEN_SEED42);
    }

    const FROZEN_SEED42: [f64; 3] = [0.6818961923066714, 0.950275407672484, 0.4275164028565197];
}
