use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::NumError;

/// Seeded pseudo-random stream.
///
/// The generator is xoshiro256++ whose 256-bit state is expanded from the
/// 64-bit seed with SplitMix64. Uniform doubles take the top 53 bits of a
/// draw (`(x >> 11) * 2^-53`, so values lie in `[0, 1)`), and Gaussian
/// draws use the Box–Muller transform on two such uniforms, consuming both
/// outputs of each transform in order. Both steps are integer-exact, so a
/// seed reproduces the same stream on every platform.
///
/// The state is single-owner. Parallel work should take child streams from
/// [`RngState::split`] rather than share one.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    inner: Xoshiro256PlusPlus,
    spare_normal: Option<f64>,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState {
            seed,
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`, by rejection to avoid modulo bias.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Standard normal draw via Box–Muller.
    pub fn next_standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u keeps the log argument in (0, 1]
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn gaussian(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.next_standard_normal()
    }

    /// `n` i.i.d. draws from `U[lo, hi)`.
    pub fn uniform_vec(&mut self, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, NumError> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(NumError::InvalidParams(format!(
                "uniform range requires lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok((0..n).map(|_| self.uniform(lo, hi)).collect())
    }

    /// `n` i.i.d. draws from `N(mean, std²)`.
    pub fn gaussian_vec(&mut self, mean: f64, std: f64, n: usize) -> Result<Vec<f64>, NumError> {
        if !(mean.is_finite() && std.is_finite() && std > 0.0) {
            return Err(NumError::InvalidParams(format!(
                "gaussian requires finite mean and std > 0, got mean {mean}, std {std}"
            )));
        }
        Ok((0..n).map(|_| self.gaussian(mean, std)).collect())
    }

    /// Child stream seeded from this one; advances the parent by one draw.
    pub fn split(&mut self) -> RngState {
        RngState::new(self.next_u64())
    }

    /// In-place Fisher–Yates shuffle.
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
        let mut a = RngState::new(42);
        let mut b = RngState::new(42);
        for _ in 0..10_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut a = RngState::new(7);
        let mut b = RngState::new(7);
        assert_eq!(
            a.gaussian_vec(0.0, 1.0, 101).unwrap(),
            b.gaussian_vec(0.0, 1.0, 101).unwrap()
        );
        assert_eq!(
            a.uniform_vec(-2.0, 3.0, 100).unwrap(),
            b.uniform_vec(-2.0, 3.0, 100).unwrap()
        );
    }

    #[test]
    fn uniform_mean() {
        let mut rng = RngState::new(1);
        let xs = rng.uniform_vec(0.0, 1.0, 100_000).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
        assert!(xs.iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn gaussian_variance() {
        let mut rng = RngState::new(2);
        let xs = rng.gaussian_vec(0.0, 1.0, 100_000).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 1.0).abs() < 0.05, "var {var}");
        assert!(mean.abs() < 0.02);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut rng = RngState::new(0);
        assert!(rng.uniform_vec(1.0, 1.0, 3).is_err());
        assert!(rng.uniform_vec(2.0, 1.0, 3).is_err());
        assert!(rng.gaussian_vec(0.0, 0.0, 3).is_err());
        assert!(rng.gaussian_vec(0.0, -1.0, 3).is_err());
    }

    #[test]
    fn below_is_in_range_and_covers() {
        let mut rng = RngState::new(8);
        let mut seen = [false; 7];
        for _ in 0..1000 {
            let v = rng.below(7);
            seen[v] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn split_streams_differ() {
        let mut parent = RngState::new(3);
        let mut a = parent.split();
        let mut b = parent.split();
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
