//! Deterministic random source.
//!
//! The generator is xoshiro256++ seeded through SplitMix64, both fixed here so
//! a seed produces the same sequence on every platform and in every build:
//!
//! * Seeding: the 64-bit seed is run through SplitMix64 four times to fill the
//!   256-bit state (`z = s += 0x9E3779B97F4A7C15`, then
//!   `z = (z ^ z>>30) * 0xBF58476D1CE4E5B9`, `z = (z ^ z>>27) * 0x94D049BB133111EB`,
//!   `z ^ z>>31`).
//! * Step: `out = rotl(s0 + s3, 23) + s0`, followed by the xoshiro256++ state
//!   transition.
//! * `next_f64` takes the top 53 bits: `(next_u64() >> 11) * 2^-53`, in [0, 1).
//! * Gaussians use the Marsaglia polar method; the spare deviate is cached and
//!   is part of the generator state.
//!
//! An `Rng` is single-owner. Parallel code forks one child per worker via
//! [`Rng::fork`] (child seed = `seed + worker_index + 1`, wrapping) or draws
//! per-task seeds from the parent stream with [`Rng::next_u64`]; it never
//! shares a generator across workers.

#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    state: [u64; 4],
    spare_gaussian: Option<f64>,
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

#[inline]
fn rotl(x: u64, k: u32) -> u64 {
    x.rotate_left(k)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let state = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self {
            seed,
            state,
            spare_gaussian: None,
        }
    }

    /// The seed this generator was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child generator for worker `worker_index`, independent of how far this
    /// generator has advanced: seeded with `seed + worker_index + 1` (wrapping).
    pub fn fork(&self, worker_index: u64) -> Rng {
        Rng::new(self.seed.wrapping_add(worker_index).wrapping_add(1))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let out = rotl(s[0].wrapping_add(s[3]), 23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        out
    }

    /// Uniform in [0, 1) with 53 random mantissa bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi). Caller validates lo < hi.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Sample from N(mean, std^2) via the polar method.
    pub fn gaussian(&mut self, mean: f64, std: f64) -> f64 {
        if let Some(z) = self.spare_gaussian.take() {
            return mean + std * z;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_gaussian = Some(v * factor);
                return mean + std * (u * factor);
            }
        }
    }

    /// Unbiased draw in [0, n) by rejection on the top of the u64 range.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below requires n > 0");
        let zone = (u64::MAX / n) * n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = Rng::new(7);
        let mut b = Rng::new(7);
        let xs: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn state_advances_between_calls() {
        let mut rng = Rng::new(7);
        let a = Tensor::<f64>::uniform(&mut rng, &[8], 0.0, 1.0).unwrap();
        let b = Tensor::<f64>::uniform(&mut rng, &[8], 0.0, 1.0).unwrap();
        assert_ne!(a.data(), b.data());
    }

    #[test]
    fn fresh_rngs_agree_on_tensors() {
        let mut a = Rng::new(7);
        let mut b = Rng::new(7);
        let ta = Tensor::<f32>::uniform(&mut a, &[32], -1.0, 1.0).unwrap();
        let tb = Tensor::<f32>::uniform(&mut b, &[32], -1.0, 1.0).unwrap();
        assert_eq!(ta.data(), tb.data());

        let ga = Tensor::<f32>::gaussian(&mut a, &[32], 0.0, 1.0).unwrap();
        let gb = Tensor::<f32>::gaussian(&mut b, &[32], 0.0, 1.0).unwrap();
        assert_eq!(ga.data(), gb.data());
    }

    #[test]
    fn forks_are_distinct_and_stable() {
        let rng = Rng::new(11);
        let mut w0 = rng.fork(0);
        let mut w1 = rng.fork(1);
        assert_ne!(w0.next_u64(), w1.next_u64());
        // Forking again yields the same child stream.
        let mut w0b = rng.fork(0);
        w0b.next_u64();
        assert_eq!(w0b.next_u64(), w0.next_u64());
    }

    #[test]
    fn uniform_mean_matches_law_of_large_numbers() {
        // 1e5 samples of U[0,1): mean must land within 0.5 +/- 0.01.
        let mut rng = Rng::new(123);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| rng.next_f64()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn gaussian_std_matches_moment_check() {
        // 1e5 samples of N(0,1): sample std within 1 +/- 0.02.
        let mut rng = Rng::new(321);
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| rng.gaussian(0.0, 1.0)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        assert!((std - 1.0).abs() < 0.02, "std {std}");
        assert!(mean.abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = Rng::new(5);
        let mut items: Vec<usize> = (0..100).collect();
        rng.shuffle(&mut items);
        let mut sorted = items.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(items, (0..100).collect::<Vec<_>>());
    }
}
