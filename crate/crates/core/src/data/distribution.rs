use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::numkit::{log_sum_exp, Matrix, RngState};
use crate::theory::{Grid, GridDensity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    Gaussian { mean: f64, std: f64 },
    /// Per-coordinate mixture: each coordinate picks its own component.
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<f64>,
        stds: Vec<f64>,
    },
    Uniform { lo: f64, hi: f64 },
    /// Circle of `radius` blurred by isotropic Gaussian noise. Always 2-D.
    Ring2d { radius: f64, noise_std: f64 },
}

/// Data-generating distribution with an exact density.
///
/// The 1-D kinds extend to `dim > 1` as products of i.i.d. coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    #[serde(flatten)]
    pub kind: DistributionKind,
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

fn normal_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    (-0.5 * z * z).exp() / (std * TAU.sqrt())
}

impl Distribution {
    pub fn new(kind: DistributionKind, dim: usize) -> Result<Self, DataError> {
        let dist = Distribution { kind, dim };
        dist.validate()?;
        Ok(dist)
    }

    pub fn gaussian(mean: f64, std: f64) -> Result<Self, DataError> {
        Self::new(DistributionKind::Gaussian { mean, std }, 1)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self, DataError> {
        Self::new(DistributionKind::Uniform { lo, hi }, 1)
    }

    pub fn mixture(weights: Vec<f64>, means: Vec<f64>, stds: Vec<f64>) -> Result<Self, DataError> {
        Self::new(DistributionKind::GaussianMixture { weights, means, stds }, 1)
    }

    pub fn ring2d(radius: f64, noise_std: f64) -> Result<Self, DataError> {
        Self::new(DistributionKind::Ring2d { radius, noise_std }, 2)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |msg: String| Err(DataError::InvalidDistribution(msg));
        if self.dim == 0 {
            return bad("dimension must be positive".into());
        }
        match &self.kind {
            DistributionKind::Gaussian { mean, std } => {
                if !(mean.is_finite() && std.is_finite() && *std > 0.0) {
                    return bad(format!("gaussian needs finite mean and std > 0, got {mean}, {std}"));
                }
            }
            DistributionKind::GaussianMixture { weights, means, stds } => {
                if weights.is_empty() || weights.len() != means.len() || weights.len() != stds.len() {
                    return bad("mixture needs equal, non-zero numbers of weights, means and stds".into());
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return bad("mixture weights must be non-negative".into());
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("mixture weights sum to {total}, not 1"));
                }
                if means.iter().any(|m| !m.is_finite()) || stds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                    return bad("mixture components need finite means and stds > 0".into());
                }
            }
            DistributionKind::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                    return bad(format!("uniform needs lo < hi, got [{lo}, {hi}]"));
                }
            }
            DistributionKind::Ring2d { radius, noise_std } => {
                if self.dim != 2 {
                    return bad(format!("ring2d is 2-D, got dimension {}", self.dim));
                }
                if !(radius.is_finite() && *radius >= 0.0 && noise_std.is_finite() && *noise_std > 0.0) {
                    return bad(format!("ring2d needs radius >= 0 and noise_std > 0, got {radius}, {noise_std}"));
                }
            }
        }
        Ok(())
    }

    /// `n` i.i.d. draws as the rows of an `(n, dim)` matrix.
    pub fn sample(&self, n: usize, rng: &mut RngState) -> Result<Matrix, DataError> {
        self.validate()?;
        let mut values = Vec::with_capacity(n * self.dim);
        match &self.kind {
            DistributionKind::Ring2d { radius, noise_std } => {
                for _ in 0..n {
                    let angle = TAU * rng.next_f64();
                    values.push(radius * angle.cos() + noise_std * rng.next_standard_normal());
                    values.push(radius * angle.sin() + noise_std * rng.next_standard_normal());
                }
            }
            kind => {
                for _ in 0..n * self.dim {
                    values.push(sample_scalar(kind, rng));
                }
            }
        }
        Ok(Matrix::from_vec(n, self.dim, values)?)
    }

    /// Exact density at `x`.
    pub fn pdf(&self, x: &[f64]) -> Result<f64, DataError> {
        if x.len() != self.dim {
            return Err(DataError::DimMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(match &self.kind {
            DistributionKind::Ring2d { radius, noise_std } => ring_pdf(x[0], x[1], *radius, *noise_std),
            kind => x.iter().map(|&xi| scalar_pdf(kind, xi)).product(),
        })
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            DistributionKind::Gaussian { mean, .. } => *mean,
            DistributionKind::GaussianMixture { weights, means, .. } => {
                weights.iter().zip(means).map(|(w, m)| w * m).sum()
            }
            DistributionKind::Uniform { lo, hi } => 0.5 * (lo + hi),
            DistributionKind::Ring2d { .. } => 0.0,
        }
    }

    /// Per-coordinate standard deviation.
    pub fn std_dev(&self) -> f64 {
        match &self.kind {
            DistributionKind::Gaussian { std, .. } => *std,
            DistributionKind::GaussianMixture { weights, means, stds } => {
                let mu = self.mean();
                let second: f64 = weights
                    .iter()
                    .zip(means.iter().zip(stds))
                    .map(|(w, (m, s))| w * (s * s + m * m))
                    .sum();
                (second - mu * mu).max(0.0).sqrt()
            }
            DistributionKind::Uniform { lo, hi } => (hi - lo) / 12f64.sqrt(),
            DistributionKind::Ring2d { radius, noise_std } => {
                (0.5 * radius * radius + noise_std * noise_std).sqrt()
            }
        }
    }

    /// Interval holding essentially all 1-D mass: the support for uniform,
    /// four standard deviations around each component otherwise.
    pub fn span(&self) -> (f64, f64) {
        match &self.kind {
            DistributionKind::Gaussian { mean, std } => (mean - 4.0 * std, mean + 4.0 * std),
            DistributionKind::GaussianMixture { weights, means, stds } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for ((w, m), s) in weights.iter().zip(means).zip(stds) {
                    if *w > 0.0 {
                        lo = lo.min(m - 4.0 * s);
                        hi = hi.max(m + 4.0 * s);
                    }
                }
                (lo, hi)
            }
            DistributionKind::Uniform { lo, hi } => (*lo, *hi),
            DistributionKind::Ring2d { radius, noise_std } => {
                (-radius - 4.0 * noise_std, radius + 4.0 * noise_std)
            }
        }
    }

    /// Bin probabilities proportional to `pdf(center) · Δ`, renormalized.
    pub fn discretize(&self, grid: &Grid) -> Result<GridDensity, DataError> {
        if self.dim != 1 {
            return Err(DataError::NotOneDimensional(self.dim));
        }
        let weights: Vec<f64> = grid
            .centers()
            .iter()
            .map(|&c| scalar_pdf(&self.kind, c) * grid.step())
            .collect();
        Ok(GridDensity::from_weights(*grid, &weights)?)
    }
}

fn sample_scalar(kind: &DistributionKind, rng: &mut RngState) -> f64 {
    match kind {
        DistributionKind::Gaussian { mean, std } => rng.gaussian(*mean, *std),
        DistributionKind::GaussianMixture { weights, means, stds } => {
            let u = rng.next_f64();
            let mut acc = 0.0;
            let mut pick = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            rng.gaussian(means[pick], stds[pick])
        }
        DistributionKind::Uniform { lo, hi } => rng.uniform(*lo, *hi),
        DistributionKind::Ring2d { .. } => unreachable!("ring2d is sampled jointly"),
    }
}

fn scalar_pdf(kind: &DistributionKind, x: f64) -> f64 {
    match kind {
        DistributionKind::Gaussian { mean, std } => normal_pdf(x, *mean, *std),
        DistributionKind::GaussianMixture { weights, means, stds } => weights
            .iter()
            .zip(means.iter().zip(stds))
            .map(|(w, (m, s))| w * normal_pdf(x, *m, *s))
            .sum(),
        DistributionKind::Uniform { lo, hi } => {
            if (*lo..=*hi).contains(&x) {
                1.0 / (hi - lo)
            } else {
                0.0
            }
        }
        DistributionKind::Ring2d { .. } => unreachable!("ring2d has no scalar density"),
    }
}

/// Ring density `(1/2π) ∫ N(x; R(cos θ, sin θ), s² I) dθ`, evaluated with the
/// periodic trapezoid rule (spectrally accurate for a smooth periodic
/// integrand) in log space.
fn ring_pdf(x: f64, y: f64, radius: f64, s: f64) -> f64 {
    let nodes = ((16.0 * TAU * radius / s).ceil() as usize).clamp(128, 100_000);
    let inv = 1.0 / (2.0 * s * s);
    let logs: Vec<f64> = (0..nodes)
        .map(|k| {
            let t = TAU * k as f64 / nodes as f64;
            let dx = x - radius * t.cos();
            let dy = y - radius * t.sin();
            -(dx * dx + dy * dy) * inv
        })
        .collect();
    let log_mean = log_sum_exp(&logs).expect("non-empty") - (nodes as f64).ln();
    log_mean.exp() / (2.0 * PI * s * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
        h * (0.5 * f(lo) + inner + 0.5 * f(hi))
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(Distribution::gaussian(0.0, 0.0).is_err());
        assert!(Distribution::uniform(1.0, 0.0).is_err());
        assert!(Distribution::mixture(vec![0.5, 0.6], vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(Distribution::mixture(vec![1.0], vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Distribution::ring2d(1.0, 0.0).is_err());
        assert!(Distribution::new(DistributionKind::Ring2d { radius: 1.0, noise_std: 0.1 }, 3).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_consistent() {
        let d = Distribution::gaussian(0.0, 1.0).unwrap();
        let a = d.sample(1000, &mut RngState::new(5)).unwrap();
        let b = d.sample(1000, &mut RngState::new(5)).unwrap();
        assert_eq!(a, b);
        let big = d.sample(100_000, &mut RngState::new(6)).unwrap();
        assert!(big.mean().abs() < 0.02);
    }

    #[test]
    fn degenerate_mixture_uses_first_component() {
        let d = Distribution::mixture(vec![1.0, 0.0], vec![-50.0, 50.0], vec![1.0, 1.0]).unwrap();
        let s = d.sample(5000, &mut RngState::new(1)).unwrap();
        assert!(s.as_slice().iter().all(|&x| x < 0.0));
    }

    #[test]
    fn closed_form_pdfs() {
        let n = Distribution::gaussian(0.0, 1.0).unwrap();
        assert!((n.pdf(&[0.0]).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        let u = Distribution::uniform(0.0, 2.0).unwrap();
        assert_eq!(u.pdf(&[1.3]).unwrap(), 0.5);
        assert_eq!(u.pdf(&[2.5]).unwrap(), 0.0);
        assert!(matches!(n.pdf(&[0.0, 1.0]), Err(DataError::DimMismatch { expected: 1, got: 2 })));
    }

    #[test]
    fn mixture_pdf_is_weighted_sum() {
        let (w, m, s) = (vec![0.2, 0.5, 0.3], vec![-1.0, 0.5, 3.0], vec![0.5, 1.0, 0.25]);
        let d = Distribution::mixture(w.clone(), m.clone(), s.clone()).unwrap();
        let mut rng = RngState::new(3);
        for _ in 0..50 {
            let x = rng.uniform(-4.0, 5.0);
            let oracle: f64 = (0..3)
                .map(|i| {
                    let z = (x - m[i]) / s[i];
                    w[i] * (-0.5 * z * z).exp() / (s[i] * (2.0 * PI).sqrt())
                })
                .sum();
            assert!((d.pdf(&[x]).unwrap() - oracle).abs() <= 1e-12);
        }
    }

    #[test]
    fn one_d_pdfs_integrate_to_one() {
        let cases = [
            Distribution::gaussian(2.0, 0.5).unwrap(),
            Distribution::mixture(vec![0.3, 0.7], vec![-2.0, 1.0], vec![0.4, 0.8]).unwrap(),
        ];
        for d in &cases {
            let (lo, hi) = d.span();
            let area = trapezoid(|x| d.pdf(&[x]).unwrap(), lo - 2.0, hi + 2.0, 20_000);
            assert!((area - 1.0).abs() < 1e-3, "{d:?}: {area}");
        }
        let u = Distribution::uniform(-1.0, 3.0).unwrap();
        let area = trapezoid(|x| u.pdf(&[x]).unwrap(), -2.0, 4.0, 60_000);
        assert!((area - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ring_pdf_integrates_to_one() {
        let d = Distribution::ring2d(1.0, 0.1).unwrap();
        let n = 200;
        let (lo, hi) = (-1.6, 1.6);
        let h = (hi - lo) / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = lo + (i as f64 + 0.5) * h;
                let y = lo + (j as f64 + 0.5) * h;
                total += d.pdf(&[x, y]).unwrap() * h * h;
            }
        }
        assert!((total - 1.0).abs() < 1e-3, "{total}");
        // closed form (1/2πs²)·exp(-(r²+R²)/2s²)·I0(rR/s²), evaluated in
        // 30-digit arithmetic
        let exact = 0.584_166_964_257_560_9;
        assert!((d.pdf(&[0.93, 0.21]).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn histogram_matches_pdf() {
        let d = Distribution::gaussian(0.0, 1.0).unwrap();
        let grid = Grid::spanning(-4.0, 4.0, 32).unwrap();
        let s = d.sample(100_000, &mut RngState::new(77)).unwrap();
        let hist = GridDensity::histogram(grid, s.as_slice()).unwrap();
        let exact = d.discretize(&grid).unwrap();
        let tv: f64 = 0.5
            * hist
                .probs()
                .iter()
                .zip(exact.probs())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        assert!(tv < 0.02, "tv {tv}");
    }

    #[test]
    fn discretize_contracts() {
        let grid = Grid::spanning(-4.0, 4.0, 64).unwrap();
        let g = Distribution::gaussian(0.0, 1.0).unwrap();
        let dens = g.discretize(&grid).unwrap();
        assert!((dens.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        // quadrature oracle: Simpson on each bin, renormalized over the span
        let simpson = |a: f64, b: f64| {
            let n = 64;
            let h = (b - a) / n as f64;
            let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
            let mut s = f(a) + f(b);
            for i in 1..n {
                s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let masses: Vec<f64> = (0..64)
            .map(|i| {
                let c = grid.center(i);
                simpson(c - grid.step() / 2.0, c + grid.step() / 2.0)
            })
            .collect();
        let total: f64 = masses.iter().sum();
        for (p, m) in dens.probs().iter().zip(&masses) {
            let q = m / total;
            assert!((p - q).abs() / q < 0.02);
        }

        let u = Distribution::uniform(-4.0, 4.0).unwrap();
        let flat = u.discretize(&grid).unwrap();
        assert!(flat.probs().iter().all(|p| (p - 1.0 / 64.0).abs() < 1e-15));

        let ring = Distribution::ring2d(1.0, 0.1).unwrap();
        assert!(matches!(ring.discretize(&grid), Err(DataError::NotOneDimensional(2))));
    }

    #[test]
    fn serde_shape() {
        let d = Distribution::gaussian(2.0, 0.5).unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(text, r#"{"kind":"gaussian","mean":2.0,"std":0.5,"dim":1}"#);
        assert_eq!(serde_json::from_str::<Distribution>(&text).unwrap(), d);
    }
}
