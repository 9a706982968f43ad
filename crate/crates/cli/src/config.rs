//! Versioned TOML experiment configs.

use std::path::{Path, PathBuf};

use gan_core::adversarial::{GanModel, NoisePrior, TrainConfig};
use gan_core::data::{load_idx, read_points_csv, Distribution};
use gan_core::neural::{LayerSpec, Mlp};
use gan_core::numkit::{Matrix, RngState};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

/// The only environment variable read: overrides the config's `out_dir`.
pub const OUT_DIR_ENV: &str = "GAN_OUT_DIR";

/// Everything needed to replay a run.
///
/// `seed` drives data synthesis and weight initialization. `train.seed`
/// drives minibatch and noise draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub train: TrainConfig,
    pub prior: NoisePrior,
    pub data: DataSource,
    pub generator: Vec<LayerSpec>,
    pub discriminator: Vec<LayerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fig1: Option<Fig1Settings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// `n` draws from a known distribution.
    Synthetic { n: usize, distribution: Distribution },
    /// IDX image file, pixels scaled to [0, 1]. `limit` keeps the first rows.
    Idx {
        images: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<usize>,
    },
    /// Point CSV, one row per point.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig1Settings {
    /// Points in the x sweep the curves are evaluated on.
    #[serde(default = "default_sweep_points")]
    pub sweep_points: usize,
    #[serde(default = "default_histogram_bins")]
    pub histogram_bins: usize,
    /// Generator samples drawn per snapshot.
    #[serde(default = "default_eval_samples")]
    pub eval_samples: usize,
    /// Kernel width of the p_g estimate; Silverman's rule when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    /// Sweep and histogram range; the distribution's span when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

fn default_sweep_points() -> usize {
    201
}

fn default_histogram_bins() -> usize {
    32
}

fn default_eval_samples() -> usize {
    10_000
}

impl Default for Fig1Settings {
    fn default() -> Self {
        Fig1Settings {
            sweep_points: default_sweep_points(),
            histogram_bins: default_histogram_bins(),
            eval_samples: default_eval_samples(),
            bandwidth: None,
            range: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates. Relative data paths are resolved against
    /// `base_dir`.
    pub fn from_toml_str(text: &str, origin: &str, base_dir: &Path) -> CliResult<Self> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::input(format!("{origin}: {e}")))?;
        cfg.validate().map_err(|e| CliError::input(format!("{origin}: {e}")))?;
        cfg.resolve_paths(base_dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, &path.display().to_string(), base)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    /// Hex SHA-256 of the config with `out_dir` removed, so the same
    /// experiment hashes the same wherever it is written.
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = None;
        hex::encode(Sha256::digest(canonical.to_toml_string().as_bytes()))
    }

    /// `--seed` replaces both the setup seed and the training seed.
    pub fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = seed {
            self.seed = s;
            self.train.seed = s;
        }
    }

    fn validate(&self) -> Result<(), String> {
        if self.version != CONFIG_VERSION {
            return Err(format!("field `version`: expected {CONFIG_VERSION}, got {}", self.version));
        }
        self.train.validate().map_err(|e| format!("section [train]: {e}"))?;
        if self.prior.dim == 0 {
            return Err("section [prior]: field `dim` must be at least 1".into());
        }
        match &self.data {
            DataSource::Synthetic { n, distribution } => {
                if *n == 0 {
                    return Err("section [data]: field `n` must be at least 1".into());
                }
                distribution
                    .validate()
                    .map_err(|e| format!("section [data.distribution]: {e}"))?;
            }
            DataSource::Idx { limit: Some(0), .. } => {
                return Err("section [data]: field `limit` must be at least 1".into());
            }
            _ => {}
        }
        if let Some(f) = &self.fig1 {
            if f.sweep_points < 2 || f.histogram_bins < 2 || f.eval_samples < 2 {
                return Err("section [fig1]: sweep_points, histogram_bins and eval_samples must be at least 2".into());
            }
            if let Some(h) = f.bandwidth {
                if !(h > 0.0 && h.is_finite()) {
                    return Err(format!("section [fig1]: field `bandwidth` must be > 0, got {h}"));
                }
            }
            if let Some([lo, hi]) = f.range {
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return Err(format!("section [fig1]: field `range` must satisfy lo < hi, got [{lo}, {hi}]"));
                }
            }
        }
        let mut rng = RngState::new(0);
        self.build_model(&mut rng).map_err(|e| e.to_string())?;
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.data {
            DataSource::Idx { images, .. } => fix(images),
            DataSource::Csv { path } => fix(path),
            DataSource::Synthetic { .. } => {}
        }
    }

    /// Fresh networks, initialized from `rng`.
    pub fn build_model(&self, rng: &mut RngState) -> CliResult<GanModel> {
        let generator = Mlp::new(&self.generator, rng)
            .map_err(|e| CliError::input(format!("generator layers: {e}")))?;
        let discriminator = Mlp::new(&self.discriminator, rng)
            .map_err(|e| CliError::input(format!("discriminator layers: {e}")))?;
        GanModel::new(generator, discriminator, self.prior).map_err(CliError::input)
    }

    /// Training points, drawn from `rng` for synthetic sources.
    pub fn load_data(&self, rng: &mut RngState) -> CliResult<Matrix> {
        match &self.data {
            DataSource::Synthetic { n, distribution } => distribution.sample(*n, rng).map_err(CliError::input),
            DataSource::Idx { images, limit } => {
                let ds = load_idx(images).map_err(CliError::input)?;
                if ds.labels.is_some() {
                    return Err(CliError::input(format!("{} holds labels, not images", images.display())));
                }
                Ok(match limit {
                    Some(l) if *l < ds.len() => ds.points.select_rows(&(0..*l).collect::<Vec<_>>()),
                    _ => ds.points,
                })
            }
            DataSource::Csv { path } => read_points_csv(path).map_err(CliError::input),
        }
    }
}

/// `--out-dir`, then the environment override, then the config, then
/// `fallback`.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: &ExperimentConfig, fallback: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from(fallback))
}
