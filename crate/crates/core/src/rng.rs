//! Seeded, portable random streams.
//!
//! A [`RandomStream`] wraps a ChaCha8 generator. Child streams are derived from
//! the parent's *seed* (never its state), so `stream.child(i)` is the same no
//! matter how many values the parent has already produced.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream keyed by `(self.seed, index)`.
    pub fn child(&self, index: u64) -> RandomStream {
        RandomStream::new(splitmix64(
            self.seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)),
        ))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform integer in `[0, n)`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }

    /// A uniform point of the open unit ball in `dim` dimensions: a normalized
    /// Gaussian direction scaled by `U^(1/dim)` with `U` in `[0, 1)`.
    pub fn unit_ball(&mut self, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        loop {
            for c in v.iter_mut() {
                *c = self.standard_normal();
            }
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 0.0 {
                let scale = self.uniform().powf(1.0 / dim as f64) / norm;
                for c in v.iter_mut() {
                    *c *= scale;
                }
                return v;
            }
        }
    }
}
