use std::path::{Path, PathBuf};
use std::time::Instant;

use gan_core::adversarial::{train_with_observer, write_model, CollapseReport, GanError, GanModel, TrainMetrics};
use gan_core::numkit::{Matrix, RngState};
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_atomic};

pub const MANIFEST_FORMAT: &str = "gan-run";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

/// Written next to every run. The config copy beside it plus these seeds
/// replay the run bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub train_seed: u64,
    pub iterations_completed: usize,
    pub diverged: bool,
    pub wall_time_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapse: Option<CollapseReport>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub out_dir: PathBuf,
    pub model: GanModel,
    pub metrics: TrainMetrics,
    pub data: Matrix,
    pub manifest: RunManifest,
}

/// Trains per `cfg` and writes config, metrics, checkpoint and manifest into
/// `out_dir`. A diverged run still writes its last good model, then fails.
pub fn cmd_train(cfg: &ExperimentConfig, out_dir: &Path) -> CliResult<TrainOutcome> {
    run_training(cfg, out_dir, "train", |_, _| {})
}

pub(crate) fn run_training(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    command: &str,
    observer: impl FnMut(usize, &GanModel),
) -> CliResult<TrainOutcome> {
    let mut root = RngState::new(cfg.seed);
    let mut data_rng = root.split();
    let mut init_rng = root.split();
    let data = cfg.load_data(&mut data_rng)?;
    let mut model = cfg.build_model(&mut init_rng)?;
    ensure_dir(out_dir)?;

    let start = Instant::now();
    let result = train_with_observer(&mut model, &data, &cfg.train, observer);
    let wall_time_secs = start.elapsed().as_secs_f64();
    let (metrics, failure) = match result {
        Ok(m) => (m, None),
        Err(GanError::Diverged { iteration, source, metrics, .. }) => {
            (metrics, Some(format!("training diverged at iteration {iteration}: {source}")))
        }
        Err(e @ GanError::Batch(_)) => return Err(CliError::input(e)),
        Err(e) => return Err(CliError::failed(e)),
    };

    let manifest = RunManifest {
        format: MANIFEST_FORMAT.into(),
        command: command.into(),
        config_sha256: cfg.content_hash(),
        seed: cfg.seed,
        train_seed: cfg.train.seed,
        iterations_completed: metrics.records.len(),
        diverged: failure.is_some(),
        wall_time_secs,
        collapse: metrics.collapse,
    };
    let mut jsonl = Vec::new();
    metrics.write_jsonl(&mut jsonl).expect("writing to memory");
    write_atomic(&out_dir.join(CONFIG_FILE), cfg.to_toml_string().as_bytes())?;
    write_atomic(&out_dir.join(METRICS_FILE), &jsonl)?;
    write_atomic(&out_dir.join(CHECKPOINT_FILE), write_model(&model).as_bytes())?;
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&out_dir.join(MANIFEST_FILE), manifest_json.as_bytes())?;
    info!(
        "{command}: {} iterations in {wall_time_secs:.2}s, outputs in {}",
        manifest.iterations_completed,
        out_dir.display()
    );
    if let Some(msg) = failure {
        return Err(CliError::failed(format!("{msg}; last good model saved in {}", out_dir.display())));
    }
    Ok(TrainOutcome {
        out_dir: out_dir.to_path_buf(),
        model,
        metrics,
        data,
        manifest,
    })
}

pub fn read_manifest(path: &Path) -> CliResult<RunManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
