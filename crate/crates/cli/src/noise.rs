//! Seeded measurement noise.
//!
//! All randomness comes from one xoshiro256++ generator. Its state is four
//! 64-bit words `s0..s3`, filled from the seed by SplitMix64, and each draw is
//!
//! ```text
//! out = rotl(s0 + s3, 23) + s0
//! t   = s1 << 17
//! s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3
//! s2 ^= t;  s3 = rotl(s3, 45)
//! ```
//!
//! Gaussian samples use the ziggurat sampler of `rand_distr::StandardNormal`.
//! Channels are perturbed one after another in a fixed order, so a seed
//! fixes every sample.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

pub struct NoiseSource {
    rng: Xoshiro256PlusPlus,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self { rng: Xoshiro256PlusPlus::seed_from_u64(seed) }
    }

    /// Add zero-mean Gaussian noise of standard deviation `rel * rms(x)`.
    pub fn perturb(&mut self, x: &mut [f64], rel: f64) {
        if rel == 0.0 || x.is_empty() {
            return;
        }
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
        let std = rel * rms;
        for v in x.iter_mut() {
            let n: f64 = StandardNormal.sample(&mut self.rng);
            *v += std * n;
        }
    }
}
