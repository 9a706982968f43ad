use super::TheoryError;

/// Uniformly spaced bin centers `start + i * step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    start: f64,
    step: f64,
    len: usize,
}

impl Grid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self, TheoryError> {
        if len == 0 {
            return Err(TheoryError::InvalidGrid("grid needs at least one bin".into()));
        }
        if !(start.is_finite() && step.is_finite() && step > 0.0) {
            return Err(TheoryError::InvalidGrid(format!(
                "start {start} and step {step} must be finite with step > 0"
            )));
        }
        Ok(Grid { start, step, len })
    }

    /// `bins` equal bins covering `[lo, hi]`; centers sit mid-bin.
    pub fn spanning(lo: f64, hi: f64, bins: usize) -> Result<Self, TheoryError> {
        if lo.is_nan() || hi.is_nan() || hi <= lo || bins == 0 {
            return Err(TheoryError::InvalidGrid(format!(
                "cannot split [{lo}, {hi}] into {bins} bins"
            )));
        }
        let step = (hi - lo) / bins as f64;
        Grid::new(lo + 0.5 * step, step, bins)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bin width Δ.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn center(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.center(i)).collect()
    }

    pub fn lo(&self) -> f64 {
        self.start - 0.5 * self.step
    }

    pub fn hi(&self) -> f64 {
        self.center(self.len - 1) + 0.5 * self.step
    }

    /// Bin holding `x`; values beyond either end go to the edge bins.
    pub fn bin_of(&self, x: f64) -> usize {
        let raw = ((x - self.lo()) / self.step).floor();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.len - 1)
        }
    }
}

/// Probability vector over a [`Grid`]: non-negative and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: Grid,
    probs: Vec<f64>,
}

const SUM_TOL: f64 = 1e-12;

impl GridDensity {
    pub fn new(grid: Grid, probs: Vec<f64>) -> Result<Self, TheoryError> {
        if probs.len() != grid.len() {
            return Err(TheoryError::InvalidDensity(format!(
                "{} probabilities for {} bins",
                probs.len(),
                grid.len()
            )));
        }
        if let Some(i) = probs.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(TheoryError::InvalidDensity(format!(
                "bin {i} has invalid probability {}",
                probs[i]
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(TheoryError::InvalidDensity(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(GridDensity { grid, probs })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(grid: Grid, weights: &[f64]) -> Result<Self, TheoryError> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(TheoryError::InvalidDensity(format!(
                "weights must have positive finite total, got {total}"
            )));
        }
        if weights.iter().any(|w| *w < 0.0) {
            return Err(TheoryError::InvalidDensity("negative weight".into()));
        }
        GridDensity::new(grid, weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(grid: Grid) -> Self {
        let p = 1.0 / grid.len() as f64;
        GridDensity {
            grid,
            probs: vec![p; grid.len()],
        }
    }

    /// Normalized histogram of samples; out-of-range samples land in the
    /// edge bins so stray mass still counts against the fit.
    pub fn histogram(grid: Grid, samples: &[f64]) -> Result<Self, TheoryError> {
        let mut counts = vec![0.0; grid.len()];
        for &x in samples {
            if !x.is_finite() {
                return Err(TheoryError::InvalidDensity(format!("non-finite sample {x}")));
            }
            counts[grid.bin_of(x)] += 1.0;
        }
        GridDensity::from_weights(grid, &counts)
    }

    /// Softmax of logits.
    pub fn from_logits(grid: Grid, logits: &[f64]) -> Result<Self, TheoryError> {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        GridDensity::from_weights(grid, &w)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn max_abs_diff(&self, other: &GridDensity) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
