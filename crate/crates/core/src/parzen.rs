//! Gaussian Parzen-window log-likelihood.
//!
//! A fitted model is the equal-weight mixture of isotropic Gaussians
//! `N(s_i, σ² I)` centred on generator samples. `σ` is chosen by maximizing
//! mean log-likelihood on a validation set. Everything is in nats.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{Matrix, NumError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParzenError {
    #[error("Parzen model needs at least one sample")]
    NoSamples,
    #[error("bandwidth must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("point has {got} coordinates, samples have {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("need at least {needed} evaluation points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("sigma grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParzenModel {
    samples: Matrix,
    sigma: f64,
}

/// Mean per-point log-likelihood and its standard error
/// (sample standard deviation over `√N`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlSummary {
    pub mean: f64,
    pub stderr: f64,
}

/// Output record of a full evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParzenReport {
    pub sigma: f64,
    pub mean_ll: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub n_test: usize,
}

fn check_sigma(sigma: f64) -> Result<(), ParzenError> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(ParzenError::BadSigma(sigma))
    }
}

fn squared_distances(samples: &Matrix, x: &[f64]) -> Vec<f64> {
    samples
        .iter_rows()
        .map(|s| s.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect()
}

/// `log((1/n) Σ N(x; s_i, σ²I))` from precomputed squared distances and
/// their minimum. The largest kernel term sits at the nearest sample, so
/// shifting by it is the usual log-sum-exp shift.
fn log_density_from(dist2: &[f64], nearest: f64, sigma: f64, dim: usize) -> f64 {
    let inv = 1.0 / (2.0 * sigma * sigma);
    let sum: f64 = dist2.iter().map(|d| (-(d - nearest) * inv).exp()).sum();
    -nearest * inv + sum.ln()
        - (dist2.len() as f64).ln()
        - 0.5 * dim as f64 * (std::f64::consts::TAU * sigma * sigma).ln()
}

fn nearest(dist2: &[f64]) -> f64 {
    dist2.iter().copied().fold(f64::INFINITY, f64::min)
}

impl ParzenModel {
    pub fn new(samples: Matrix, sigma: f64) -> Result<Self, ParzenError> {
        if samples.rows() == 0 || samples.cols() == 0 {
            return Err(ParzenError::NoSamples);
        }
        check_sigma(sigma)?;
        Ok(ParzenModel { samples, sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn samples(&self) -> &Matrix {
        &self.samples
    }

    pub fn dim(&self) -> usize {
        self.samples.cols()
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64, ParzenError> {
        if x.len() != self.dim() {
            return Err(ParzenError::DimMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let d2 = squared_distances(&self.samples, x);
        Ok(log_density_from(&d2, nearest(&d2), self.sigma, self.dim()))
    }

    /// Per-row log densities, scored in parallel but returned in row order.
    pub fn log_densities(&self, points: &Matrix) -> Result<Vec<f64>, ParzenError> {
        if points.cols() != self.dim() {
            return Err(ParzenError::DimMismatch {
                expected: self.dim(),
                got: points.cols(),
            });
        }
        Ok((0..points.rows())
            .into_par_iter()
            .map(|i| {
                let d2 = squared_distances(&self.samples, points.row(i));
                log_density_from(&d2, nearest(&d2), self.sigma, self.dim())
            })
            .collect())
    }

    pub fn mean_ll_with_stderr(&self, test_points: &Matrix) -> Result<LlSummary, ParzenError> {
        if test_points.rows() < 2 {
            return Err(ParzenError::TooFewPoints {
                needed: 2,
                got: test_points.rows(),
            });
        }
        Ok(summarize(&self.log_densities(test_points)?))
    }
}

fn summarize(values: &[f64]) -> LlSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    LlSummary {
        mean,
        stderr: (var / n).sqrt(),
    }
}

/// Mean validation log-likelihood for every σ in `sigma_grid`.
pub fn validation_scores(
    samples: &Matrix,
    validation_points: &Matrix,
    sigma_grid: &[f64],
) -> Result<Vec<f64>, ParzenError> {
    if sigma_grid.is_empty() {
        return Err(ParzenError::EmptyGrid);
    }
    for &s in sigma_grid {
        check_sigma(s)?;
    }
    if samples.rows() == 0 {
        return Err(ParzenError::NoSamples);
    }
    if validation_points.rows() == 0 {
        return Err(ParzenError::TooFewPoints { needed: 1, got: 0 });
    }
    if validation_points.cols() != samples.cols() {
        return Err(ParzenError::DimMismatch {
            expected: samples.cols(),
            got: validation_points.cols(),
        });
    }
    let dim = samples.cols();
    // distances are computed once per point and reused for every σ
    let per_point: Vec<Vec<f64>> = (0..validation_points.rows())
        .into_par_iter()
        .map(|i| {
            let d2 = squared_distances(samples, validation_points.row(i));
            let near = nearest(&d2);
            sigma_grid.iter().map(|&s| log_density_from(&d2, near, s, dim)).collect()
        })
        .collect();
    let n = per_point.len() as f64;
    Ok((0..sigma_grid.len())
        .map(|j| per_point.iter().map(|row| row[j]).sum::<f64>() / n)
        .collect())
}

/// The grid σ with the best mean validation log-likelihood. Ties go to the
/// smaller σ.
pub fn cross_validate_sigma(
    samples: &Matrix,
    validation_points: &Matrix,
    sigma_grid: &[f64],
) -> Result<f64, ParzenError> {
    let scores = validation_scores(samples, validation_points, sigma_grid)?;
    let mut best: Option<(f64, f64)> = None;
    for (&sigma, &score) in sigma_grid.iter().zip(&scores) {
        best = match best {
            Some((bs, bv)) if score < bv || (score == bv && sigma >= bs) => Some((bs, bv)),
            _ => Some((sigma, score)),
        };
    }
    Ok(best.expect("grid is non-empty").0)
}

/// `count` log-spaced values from `0.01 · scale` to `scale`.
pub fn default_sigma_grid(scale: f64, count: usize) -> Vec<f64> {
    log_spaced(0.01 * scale, scale, count)
}

pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// Cross-validates σ on `validation` (skipped for a single-value grid),
/// fits on `samples`, and scores `test`.
pub fn evaluate(
    samples: &Matrix,
    validation: &Matrix,
    test: &Matrix,
    sigma_grid: &[f64],
) -> Result<ParzenReport, ParzenError> {
    let sigma = match sigma_grid {
        [] => return Err(ParzenError::EmptyGrid),
        [only] => *only,
        grid => cross_validate_sigma(samples, validation, grid)?,
    };
    let model = ParzenModel::new(samples.clone(), sigma)?;
    let summary = model.mean_ll_with_stderr(test)?;
    Ok(ParzenReport {
        sigma,
        mean_ll: summary.mean,
        stderr: summary.stderr,
        n_samples: samples.rows(),
        n_test: test.rows(),
    })
}

/// Expected log-density of `N(0, 1 + σ²)` under `x ~ N(0, 1)`, which is what a
/// Parzen fit to standard-normal samples converges to.
pub fn gaussian_parzen_cross_entropy(sigma: f64) -> f64 {
    let v = 1.0 + sigma * sigma;
    -0.5 * (std::f64::consts::TAU * v).ln() - 0.5 / v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::RngState;

    fn column(values: &[f64]) -> Matrix {
        Matrix::from_vec(values.len(), 1, values.to_vec()).unwrap()
    }

    fn naive_log_density(samples: &Matrix, sigma: f64, x: &[f64]) -> f64 {
        let d = samples.cols() as f64;
        let norm = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-d / 2.0);
        let mean: f64 = samples
            .iter_rows()
            .map(|s| {
                let d2: f64 = s.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
                norm * (-d2 / (2.0 * sigma * sigma)).exp()
            })
            .sum::<f64>()
            / samples.rows() as f64;
        mean.ln()
    }

    #[test]
    fn kernel_peak() {
        let m = ParzenModel::new(column(&[0.3]), 1.0).unwrap();
        assert!((m.log_density(&[0.3]).unwrap() + 0.918_938_533_204_672_8).abs() < 1e-15);
    }

    #[test]
    fn two_component_mixture() {
        let m = ParzenModel::new(column(&[-1.0, 1.0]), 1.0).unwrap();
        // both kernels give e^{-1/2}/√(2π)
        let direct = ((-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt()).ln();
        let got = m.log_density(&[0.0]).unwrap();
        assert!((got - direct).abs() < 1e-14);
        assert!((got + 1.418_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn far_points_stay_finite() {
        let m = ParzenModel::new(column(&[0.0]), 1.0).unwrap();
        // -½·100² - ½ log 2π
        let got = m.log_density(&[100.0]).unwrap();
        assert!((got - (-5000.0 - 0.918_938_533_204_672_8)).abs() < 1e-9);
        let got = m.log_density(&[1000.0]).unwrap();
        assert!(got.is_finite());
    }

    #[test]
    fn matches_naive_oracle_in_several_dims() {
        let mut rng = RngState::new(4);
        let samples = Matrix::from_vec(30, 3, rng.gaussian_vec(0.0, 1.0, 90).unwrap()).unwrap();
        let m = ParzenModel::new(samples.clone(), 0.7).unwrap();
        for _ in 0..20 {
            let x = rng.gaussian_vec(0.0, 1.0, 3).unwrap();
            assert!((m.log_density(&x).unwrap() - naive_log_density(&samples, 0.7, &x)).abs() < 1e-12);
        }
        assert!(matches!(m.log_density(&[0.0]), Err(ParzenError::DimMismatch { expected: 3, got: 1 })));
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = RngState::new(41);
        let values = rng.gaussian_vec(0.0, 1.0, 50).unwrap();
        let mut shuffled = values.clone();
        rng.shuffle(&mut shuffled);
        let a = ParzenModel::new(column(&values), 0.3).unwrap();
        let b = ParzenModel::new(column(&shuffled), 0.3).unwrap();
        for x in [-2.0, 0.1, 0.7, 3.0] {
            assert!((a.log_density(&[x]).unwrap() - b.log_density(&[x]).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let m = ParzenModel::new(column(&[-1.0, 0.2, 0.25, 2.0]), 0.4).unwrap();
        let (lo, hi, n) = (-6.0, 7.0, 13_000);
        let h = (hi - lo) / n as f64;
        let f = |x: f64| m.log_density(&[x]).unwrap().exp();
        let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
        let area = h * (0.5 * f(lo) + inner + 0.5 * f(hi));
        assert!((area - 1.0).abs() < 1e-3);
    }

    #[test]
    fn monotone_away_from_samples() {
        let m = ParzenModel::new(column(&[-0.5, 0.0, 0.5]), 0.2).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let x = 1.0 + k as f64 * 0.5;
            let v = m.log_density(&[x]).unwrap();
            assert!(v < prev && v.is_finite());
            prev = v;
        }
        // 10^3 σ away is still finite
        assert!(m.log_density(&[200.5]).unwrap().is_finite());
    }

    #[test]
    fn stderr_contracts() {
        let m = ParzenModel::new(column(&[0.0, 1.0]), 0.5).unwrap();
        let same = column(&[0.3; 5]);
        let s = m.mean_ll_with_stderr(&same).unwrap();
        assert_eq!(s.stderr, 0.0);
        assert!(matches!(
            m.mean_ll_with_stderr(&column(&[0.3])),
            Err(ParzenError::TooFewPoints { .. })
        ));

        let mut rng = RngState::new(6);
        let pts = column(&rng.gaussian_vec(0.0, 2.0, 40).unwrap());
        let s = m.mean_ll_with_stderr(&pts).unwrap();
        let per: Vec<f64> = (0..40).map(|i| naive_log_density(m.samples(), 0.5, pts.row(i))).collect();
        let mean = per.iter().sum::<f64>() / 40.0;
        let sd = (per.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 39.0).sqrt();
        assert!((s.mean - mean).abs() < 1e-12);
        assert!((s.stderr - sd / 40f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cv_singleton_and_empty_grid() {
        let s = column(&[0.0, 1.0]);
        assert_eq!(cross_validate_sigma(&s, &s, &[0.42]).unwrap(), 0.42);
        assert_eq!(cross_validate_sigma(&s, &s, &[]), Err(ParzenError::EmptyGrid));
        assert_eq!(cross_validate_sigma(&s, &s, &[0.1, -1.0]), Err(ParzenError::BadSigma(-1.0)));
    }

    #[test]
    fn cv_matches_exhaustive_evaluation() {
        let mut rng = RngState::new(12);
        let samples = column(&rng.gaussian_vec(0.0, 1.0, 300).unwrap());
        let valid = column(&rng.gaussian_vec(0.0, 1.0, 100).unwrap());
        let grid = default_sigma_grid(1.0, 20);
        let chosen = cross_validate_sigma(&samples, &valid, &grid).unwrap();
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &sigma in &grid {
            let mean = (0..valid.rows())
                .map(|i| naive_log_density(&samples, sigma, valid.row(i)))
                .sum::<f64>()
                / valid.rows() as f64;
            if mean > best.0 {
                best = (mean, sigma);
            }
        }
        assert_eq!(chosen, best.1);
    }

    #[test]
    fn ties_prefer_smaller_sigma() {
        let s = column(&[0.0, 1.0]);
        assert_eq!(cross_validate_sigma(&s, &s, &[0.5, 0.3, 0.5, 0.3]).unwrap(), 0.3);
    }

    #[test]
    fn tight_cluster_picks_small_sigma() {
        let mut rng = RngState::new(13);
        let samples = column(&rng.gaussian_vec(0.0, 0.05, 500).unwrap());
        let valid = column(&rng.gaussian_vec(0.0, 0.05, 200).unwrap());
        let grid = log_spaced(0.01, 1.0, 20);
        assert!(cross_validate_sigma(&samples, &valid, &grid).unwrap() <= 0.2);
    }

    #[test]
    fn grid_shapes() {
        let g = default_sigma_grid(2.0, 20);
        assert_eq!(g.len(), 20);
        assert!((g[0] - 0.02).abs() < 1e-15 && (g[19] - 2.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn analytic_gaussian_oracle() {
        let mut rng = RngState::new(2024);
        let samples = column(&rng.gaussian_vec(0.0, 1.0, 10_000).unwrap());
        let valid = column(&rng.gaussian_vec(0.0, 1.0, 1_000).unwrap());
        let test = column(&rng.gaussian_vec(0.0, 1.0, 10_000).unwrap());
        let report = evaluate(&samples, &valid, &test, &default_sigma_grid(1.0, 20)).unwrap();
        let expected = gaussian_parzen_cross_entropy(report.sigma);
        assert!(
            (report.mean_ll - expected).abs() < 3.0 * report.stderr,
            "{report:?} vs {expected}"
        );
    }
}
