use std::io::{self, BufRead, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use super::{
    discriminator_step, generator_step, sample_generator, value_estimate, GanError, GanModel,
    TrainConfig,
};
use crate::numkit::{Matrix, RngState};

/// Metrics of one outer iteration (k discriminator steps + 1 generator step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Game value on the last discriminator minibatch, after both updates.
    pub value_estimate: f64,
    /// `-(mean log D(x) + mean log(1 - D(G(z))))` before the last D update.
    pub d_loss: f64,
    /// Generator loss before its update.
    pub g_loss: f64,
    pub mean_d_real: f64,
    pub mean_d_fake: f64,
}

impl IterationRecord {
    fn all_finite(&self) -> bool {
        [
            self.value_estimate,
            self.d_loss,
            self.g_loss,
            self.mean_d_real,
            self.mean_d_fake,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Mean pairwise distances among generator samples and among data points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub sample_spread: f64,
    pub data_spread: f64,
    /// True when `sample_spread < 0.01 · data_spread`.
    pub collapsed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainMetrics {
    pub records: Vec<IterationRecord>,
    pub collapse: Option<CollapseReport>,
}

impl TrainMetrics {
    /// One JSON object per line, in iteration order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn read_metrics_jsonl<R: BufRead>(input: R) -> io::Result<Vec<IterationRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1))
        })?);
    }
    Ok(out)
}

const COLLAPSE_POINTS: usize = 256;
const COLLAPSE_RATIO: f64 = 0.01;
// keeps the monitor's draws off the training stream
const COLLAPSE_STREAM: u64 = 0x636f_6c6c_6170_7365;

fn mean_pairwise_distance(points: &Matrix) -> f64 {
    let n = points.rows();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += points
                .row(i)
                .iter()
                .zip(points.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
        }
    }
    total / (n * (n - 1) / 2) as f64
}

/// Flags a generator whose samples are far less spread out than the data.
/// Diagnostic only.
pub fn collapse_check(model: &GanModel, data: &Matrix, rng: &mut RngState) -> Result<CollapseReport, GanError> {
    let samples = sample_generator(model, COLLAPSE_POINTS, rng)?;
    let data = if data.rows() > COLLAPSE_POINTS {
        let idx: Vec<usize> = (0..COLLAPSE_POINTS).map(|_| rng.below(data.rows())).collect();
        data.select_rows(&idx)
    } else {
        data.clone()
    };
    let sample_spread = mean_pairwise_distance(&samples);
    let data_spread = mean_pairwise_distance(&data);
    Ok(CollapseReport {
        sample_spread,
        data_spread,
        collapsed: sample_spread < COLLAPSE_RATIO * data_spread,
    })
}

fn minibatch(data: &Matrix, m: usize, rng: &mut RngState) -> Matrix {
    let idx: Vec<usize> = (0..m).map(|_| rng.below(data.rows())).collect();
    data.select_rows(&idx)
}

/// Alternating minibatch training; see [`train_with_observer`].
pub fn train(model: &mut GanModel, dataset: &Matrix, cfg: &TrainConfig) -> Result<TrainMetrics, GanError> {
    train_with_observer(model, dataset, cfg, |_, _| {})
}

/// Runs `cfg.iterations` outer iterations. Each one takes `k` discriminator
/// ascent steps, each on a fresh data minibatch (drawn with replacement) and
/// a fresh noise minibatch, then one generator step on fresh noise.
///
/// The run is a pure function of the starting model, the data and `cfg`.
/// `observer` is called with `0` before the first iteration and with the
/// number of completed iterations after each one. On a non-finite value the
/// model is rolled back to the state before the failing iteration and
/// [`GanError::Diverged`] carries that last good model.
pub fn train_with_observer(
    model: &mut GanModel,
    dataset: &Matrix,
    cfg: &TrainConfig,
    mut observer: impl FnMut(usize, &GanModel),
) -> Result<TrainMetrics, GanError> {
    cfg.validate()?;
    if dataset.rows() < cfg.batch_size {
        return Err(GanError::Batch(format!(
            "dataset has {} rows, fewer than the batch size {}",
            dataset.rows(),
            cfg.batch_size
        )));
    }
    if dataset.cols() != model.data_dim() {
        return Err(GanError::Batch(format!(
            "dataset has {} columns, generator emits {}",
            dataset.cols(),
            model.data_dim()
        )));
    }
    let mut rng = RngState::new(cfg.seed);
    let mut metrics = TrainMetrics::default();
    observer(0, model);
    for iteration in 0..cfg.iterations {
        let last_good = model.clone();
        match run_iteration(model, dataset, cfg, &mut rng, iteration) {
            Ok(record) => metrics.records.push(record),
            Err(err) => {
                *model = last_good.clone();
                return Err(GanError::Diverged {
                    iteration,
                    source: Box::new(err),
                    last_good: Box::new(last_good),
                    metrics,
                });
            }
        }
        observer(iteration + 1, model);
    }
    if cfg.iterations > 0 {
        let mut monitor_rng = RngState::new(cfg.seed ^ COLLAPSE_STREAM);
        let report = collapse_check(model, dataset, &mut monitor_rng)?;
        if report.collapsed {
            warn!(
                "generator samples look collapsed: mean pairwise distance {:.3e} vs {:.3e} in the data",
                report.sample_spread, report.data_spread
            );
        }
        metrics.collapse = Some(report);
    }
    Ok(metrics)
}

fn run_iteration(
    model: &mut GanModel,
    dataset: &Matrix,
    cfg: &TrainConfig,
    rng: &mut RngState,
    iteration: usize,
) -> Result<IterationRecord, GanError> {
    let tag = |err: GanError| match err {
        GanError::NonFinite { stage, value, .. } => GanError::NonFinite { stage, value, iteration },
        other => other,
    };
    let scale = cfg.lr_scale(iteration);
    let scaled = TrainConfig {
        lr_d: cfg.lr_d * scale,
        lr_g: cfg.lr_g * scale,
        ..cfg.clone()
    };
    let cfg = &scaled;
    let m = cfg.batch_size;
    let mut last = None;
    for _ in 0..cfg.k {
        let x = minibatch(dataset, m, rng);
        let z = model.prior.sample(m, rng)?;
        let d = discriminator_step(model, &x, &z, cfg, rng).map_err(tag)?;
        last = Some((x, z, d));
    }
    let (x, z, d_out) = last.expect("k >= 1");
    let z_g = model.prior.sample(m, rng)?;
    let g_out = generator_step(model, &z_g, cfg, rng).map_err(tag)?;
    let record = IterationRecord {
        iteration,
        value_estimate: value_estimate(model, &x, &z)?,
        d_loss: -d_out.objective,
        g_loss: g_out.objective,
        mean_d_real: d_out.mean_d_real,
        mean_d_fake: d_out.mean_d_fake,
    };
    if !record.all_finite() {
        return Err(GanError::NonFinite {
            stage: "metrics",
            value: record.value_estimate,
            iteration,
        });
    }
    Ok(record)
}
