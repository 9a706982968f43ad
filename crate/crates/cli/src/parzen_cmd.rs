use std::path::Path;

use gan_core::data::read_points_csv;
use gan_core::numkit::Matrix;
use gan_core::parzen::{default_sigma_grid, evaluate, log_spaced, ParzenReport};

use crate::error::{CliError, CliResult};

pub const AUTO_GRID_POINTS: usize = 20;

/// Parses a σ grid spec:
/// - `auto`: 20 log-spaced values from `0.01 · scale` to `scale`
/// - `0.2`: that value alone, so cross-validation is skipped
/// - `0.1,0.2,0.5`: an explicit list
/// - `lo:hi:n`: `n` log-spaced values from `lo` to `hi`
pub fn parse_sigma_grid(spec: &str, scale: f64) -> CliResult<Vec<f64>> {
    let bad = |why: &str| CliError::input(format!("sigma grid {spec:?}: {why}"));
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| *v > 0.0 && v.is_finite())
            .ok_or_else(|| bad(&format!("{:?} is not a positive number", s.trim())))
    };
    let spec_t = spec.trim();
    let grid = if spec_t == "auto" {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(bad("the samples have zero spread, so there is no scale for auto"));
        }
        default_sigma_grid(scale, AUTO_GRID_POINTS)
    } else if let Some((lo, rest)) = spec_t.split_once(':') {
        let (hi, n) = rest.split_once(':').ok_or_else(|| bad("expected lo:hi:n"))?;
        let (lo, hi) = (number(lo)?, number(hi)?);
        let n: usize = n.trim().parse().ok().filter(|n| *n >= 1).ok_or_else(|| bad("n must be a positive integer"))?;
        if lo > hi {
            return Err(bad("lo must not exceed hi"));
        }
        log_spaced(lo, hi, n)
    } else {
        spec_t.split(',').map(number).collect::<CliResult<Vec<f64>>>()?
    };
    Ok(grid)
}

/// Mean per-coordinate standard deviation.
fn spread(points: &Matrix) -> f64 {
    let n = points.rows() as f64;
    let d = points.cols();
    let mut total = 0.0;
    for c in 0..d {
        let mean = points.iter_rows().map(|r| r[c]).sum::<f64>() / n;
        total += (points.iter_rows().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n).sqrt();
    }
    total / d as f64
}

fn load(path: &Path, role: &str) -> CliResult<Matrix> {
    if !path.exists() {
        return Err(CliError::input(format!("{role} file not found: {}", path.display())));
    }
    read_points_csv(path).map_err(CliError::input)
}

/// Cross-validates σ on `valid`, fits on `samples`, scores `test`.
pub fn cmd_eval_parzen(samples: &Path, test: &Path, valid: &Path, grid_spec: &str) -> CliResult<ParzenReport> {
    let s = load(samples, "samples")?;
    let t = load(test, "test")?;
    let v = load(valid, "validation")?;
    for (role, m) in [("test", &t), ("validation", &v)] {
        if m.cols() != s.cols() {
            return Err(CliError::input(format!(
                "dimension mismatch: samples have dimension {}, {role} points have dimension {}",
                s.cols(),
                m.cols()
            )));
        }
    }
    let grid = parse_sigma_grid(grid_spec, spread(&s))?;
    evaluate(&s, &v, &t, &grid).map_err(CliError::input)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs() {
        assert_eq!(parse_sigma_grid("0.2", 1.0).unwrap(), vec![0.2]);
        assert_eq!(parse_sigma_grid("0.1, 0.3", 1.0).unwrap(), vec![0.1, 0.3]);
        let g = parse_sigma_grid("0.01:1:3", 1.0).unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[1] - 0.1).abs() < 1e-12);
        let auto = parse_sigma_grid("auto", 2.0).unwrap();
        assert_eq!(auto.len(), AUTO_GRID_POINTS);
        assert!((auto[0] - 0.02).abs() < 1e-12 && (auto[19] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bad_grid_specs_are_input_errors() {
        for spec in ["", "0", "-1", "a", "1:0.1:3", "0.1:1", "0.1:1:0", "nan"] {
            assert_eq!(parse_sigma_grid(spec, 1.0).unwrap_err().exit_code(), 2, "{spec}");
        }
        assert!(parse_sigma_grid("auto", 0.0).is_err());
    }
}
