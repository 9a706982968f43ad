//! 1-D training run that exports the curves of the classic four-panel
//! picture: data density, generator density, D(x) and the optimal D.

use std::path::{Path, PathBuf};

use gan_core::adversarial::{sample_generator, GanModel};
use gan_core::data::Distribution;
use gan_core::numkit::{Matrix, RngState};
use gan_core::parzen::ParzenModel;
use gan_core::theory::{jsd, y_star, Grid, GridDensity};
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, write_atomic};
use crate::train_cmd::{run_training, TrainOutcome};

pub const CURVE_COLUMNS: [&str; 5] = ["x", "p_data", "p_g_est", "d_of_x", "d_star"];
pub const SUMMARY_FILE: &str = "fig1_summary.json";

/// Sweep points count as data support where `p_data` exceeds this fraction
/// of its largest value on the sweep.
pub const SUPPORT_FRACTION: f64 = 0.01;

// evaluation draws are independent of the training stream
const EVAL_STREAM: u64 = 0x6669_6731_6576_616c;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub x: f64,
    pub p_data: f64,
    pub p_g_est: f64,
    pub d_of_x: f64,
    /// `p_data / (p_data + p_g_est)`; NaN where both vanish.
    pub d_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Snapshot {
    pub iteration: usize,
    /// JSD between the histogram of generator samples and discretized p_data.
    pub jsd: f64,
    /// Mean `|D(x) - 0.5|` over the data support.
    pub d_deviation: f64,
    pub bandwidth: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Summary {
    pub range: [f64; 2],
    pub histogram_bins: usize,
    pub eval_samples: usize,
    pub support_fraction: f64,
    pub snapshots: Vec<Fig1Snapshot>,
}

impl Fig1Summary {
    pub fn last(&self) -> &Fig1Snapshot {
        self.snapshots.last().expect("at least one snapshot")
    }
}

/// Snapshot iterations: 0, 1%, 10% and 100% of the run, deduplicated.
pub fn snapshot_iterations(total: usize) -> Vec<usize> {
    let mut its: Vec<usize> = [0, total.div_ceil(100), total.div_ceil(10), total]
        .into_iter()
        .filter(|&i| i <= total)
        .collect();
    its.dedup();
    its
}

/// Trains on the configured 1-D distribution, then writes one curve CSV per
/// snapshot plus a JSON summary.
pub fn cmd_fig1(cfg: &ExperimentConfig, out_dir: &Path) -> CliResult<(Fig1Summary, TrainOutcome)> {
    let distribution = match &cfg.data {
        DataSource::Synthetic { distribution, .. } if distribution.dim == 1 => distribution.clone(),
        DataSource::Synthetic { distribution, .. } => {
            return Err(CliError::input(format!(
                "fig1 needs a 1-D data distribution, config has dimension {}",
                distribution.dim
            )))
        }
        _ => return Err(CliError::input("fig1 needs a synthetic data distribution with a known density")),
    };
    let settings = cfg.fig1.clone().unwrap_or_default();
    let [lo, hi] = settings.range.unwrap_or_else(|| {
        let (a, b) = distribution.span();
        [a, b]
    });

    let wanted = snapshot_iterations(cfg.train.iterations);
    let mut models: Vec<(usize, GanModel)> = Vec::new();
    let outcome = run_training(cfg, out_dir, "fig1", |i, m| {
        if wanted.contains(&i) {
            models.push((i, m.clone()));
        }
    })?;

    let hist_grid = Grid::spanning(lo, hi, settings.histogram_bins).map_err(CliError::input)?;
    let p_data_hist = distribution.discretize(&hist_grid).map_err(CliError::input)?;
    let mut snapshots = Vec::new();
    for (iteration, model) in &models {
        let mut rng = RngState::new(cfg.seed ^ EVAL_STREAM);
        let samples = sample_generator(model, settings.eval_samples, &mut rng).map_err(CliError::failed)?;
        let bandwidth = settings.bandwidth.unwrap_or_else(|| silverman_bandwidth(samples.as_slice(), hi - lo));
        let rows = curves(model, &distribution, &samples, bandwidth, lo, hi, settings.sweep_points)?;
        let hist = GridDensity::histogram(hist_grid, samples.as_slice()).map_err(CliError::failed)?;
        let file = format!("fig1_iter{iteration:06}.csv");
        write_atomic(&out_dir.join(&file), curves_csv(&rows).as_bytes())?;
        snapshots.push(Fig1Snapshot {
            iteration: *iteration,
            jsd: jsd(&p_data_hist, &hist).map_err(CliError::failed)?,
            d_deviation: support_deviation(&rows),
            bandwidth,
            file,
        });
    }
    let summary = Fig1Summary {
        range: [lo, hi],
        histogram_bins: settings.histogram_bins,
        eval_samples: settings.eval_samples,
        support_fraction: SUPPORT_FRACTION,
        snapshots,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_atomic(&out_dir.join(SUMMARY_FILE), json.as_bytes())?;
    Ok((summary, outcome))
}

/// `1.06 · σ̂ · n^(-1/5)`, floored so a collapsed generator still gets a
/// usable kernel.
pub fn silverman_bandwidth(samples: &[f64], range: f64) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (1.06 * var.sqrt() * n.powf(-0.2)).max(1e-3 * range)
}

fn curves(
    model: &GanModel,
    distribution: &Distribution,
    samples: &Matrix,
    bandwidth: f64,
    lo: f64,
    hi: f64,
    points: usize,
) -> CliResult<Vec<CurveRow>> {
    let xs: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let sweep = Matrix::from_vec(points, 1, xs.clone()).map_err(CliError::failed)?;
    let kde = ParzenModel::new(samples.clone(), bandwidth).map_err(CliError::failed)?;
    let log_pg = kde.log_densities(&sweep).map_err(CliError::failed)?;
    let d = model.discriminator.predict(&sweep).map_err(CliError::failed)?;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let p_data = distribution.pdf(&[x]).map_err(CliError::failed)?;
            let p_g_est = log_pg[i].exp();
            Ok(CurveRow {
                x,
                p_data,
                p_g_est,
                d_of_x: d[(i, 0)],
                d_star: y_star(p_data, p_g_est).unwrap_or(f64::NAN),
            })
        })
        .collect()
}

/// Mean `|d_of_x - 0.5|` over rows whose `p_data` exceeds
/// [`SUPPORT_FRACTION`] of the peak.
pub fn support_deviation(rows: &[CurveRow]) -> f64 {
    let peak = rows.iter().map(|r| r.p_data).fold(0.0, f64::max);
    let support: Vec<f64> = rows
        .iter()
        .filter(|r| r.p_data > SUPPORT_FRACTION * peak)
        .map(|r| (r.d_of_x - 0.5).abs())
        .collect();
    if support.is_empty() {
        return f64::NAN;
    }
    support.iter().sum::<f64>() / support.len() as f64
}

pub fn curves_csv(rows: &[CurveRow]) -> String {
    let mut out = CURVE_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let cells = [r.x, r.p_data, r.p_g_est, r.d_of_x, r.d_star].map(fmt_f64);
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn read_curves_csv(path: &Path) -> CliResult<Vec<CurveRow>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != CURVE_COLUMNS.join(",") {
        return Err(CliError::input(format!("{}: unexpected header {header:?}", path.display())));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || CliError::input(format!("{} line {}: expected 5 numbers", path.display(), i + 2));
            let v: Vec<f64> = line
                .split(',')
                .map(|c| c.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad())?;
            match v[..] {
                [x, p_data, p_g_est, d_of_x, d_star] => Ok(CurveRow { x, p_data, p_g_est, d_of_x, d_star }),
                _ => Err(bad()),
            }
        })
        .collect()
}

pub fn read_summary(path: &Path) -> CliResult<Fig1Summary> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn snapshot_path(out_dir: &Path, snap: &Fig1Snapshot) -> PathBuf {
    out_dir.join(&snap.file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_schedule() {
        assert_eq!(snapshot_iterations(4000), vec![0, 40, 400, 4000]);
        assert_eq!(snapshot_iterations(5), vec![0, 1, 5]);
        assert_eq!(snapshot_iterations(0), vec![0]);
    }

    #[test]
    fn deviation_ignores_points_off_support() {
        let row = |p_data, d_of_x| CurveRow { x: 0.0, p_data, p_g_est: 0.0, d_of_x, d_star: 0.5 };
        let rows = [row(1.0, 0.6), row(0.5, 0.3), row(0.005, 1.0)];
        assert!((support_deviation(&rows) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn silverman_for_unit_variance() {
        let xs: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let h = silverman_bandwidth(&xs, 10.0);
        assert!((h - 1.06 * 1000f64.powf(-0.2)).abs() < 1e-12);
        assert_eq!(silverman_bandwidth(&[2.0; 10], 10.0), 1e-2);
    }

    #[test]
    fn curves_round_trip() {
        let rows = vec![
            CurveRow { x: 0.1, p_data: 1.0 / 3.0, p_g_est: 2e-300, d_of_x: 0.5, d_star: 0.25 },
            CurveRow { x: 4.0, p_data: 0.0, p_g_est: 0.0, d_of_x: 0.9, d_star: f64::NAN },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        write_atomic(&path, curves_csv(&rows).as_bytes()).unwrap();
        let back = read_curves_csv(&path).unwrap();
        assert_eq!(back[0], rows[0]);
        assert!(back[1].d_star.is_nan() && back[1].d_of_x == 0.9);
    }
}
