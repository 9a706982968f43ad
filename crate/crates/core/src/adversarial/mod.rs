//! The two-player game between a generator `G(z)` and a discriminator `D(x)`.
//!
//! `D` ends in a single sigmoid unit and is trained to tell data from
//! samples. `G` maps noise from the prior to data space and is trained
//! against `D`. The game value is
//! `V(D, G) = E_data[log D(x)] + E_z[log(1 - D(G(z)))]`.

mod checkpoint;
mod objective;
mod steps;
mod train;

pub use checkpoint::{load_model, read_model, save_model, write_model, MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use objective::{safe_ln, value_estimate, GeneratorLoss, LOG_EPS};
pub use steps::{
    discriminator_gradients, discriminator_step, generator_gradients, generator_step, StepOutcome,
};
pub use train::{
    collapse_check, read_metrics_jsonl, train, train_with_observer, CollapseReport, IterationRecord,
    TrainMetrics,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::{Activation, Mlp, NeuralError};
use crate::numkit::{Matrix, NumError, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorKind {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, std: f64 },
}

/// Noise prior `p_z`: i.i.d. coordinates of the given kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisePrior {
    #[serde(flatten)]
    pub kind: PriorKind,
    pub dim: usize,
}

impl NoisePrior {
    pub fn uniform(lo: f64, hi: f64, dim: usize) -> Self {
        NoisePrior {
            kind: PriorKind::Uniform { lo, hi },
            dim,
        }
    }

    pub fn gaussian(mean: f64, std: f64, dim: usize) -> Self {
        NoisePrior {
            kind: PriorKind::Gaussian { mean, std },
            dim,
        }
    }

    /// `n` draws as an `(n, dim)` matrix, filled row by row.
    pub fn sample(&self, n: usize, rng: &mut RngState) -> Result<Matrix, NumError> {
        if self.dim == 0 {
            return Err(NumError::InvalidParams("prior dimension must be positive".into()));
        }
        let values = match self.kind {
            PriorKind::Uniform { lo, hi } => rng.uniform_vec(lo, hi, n * self.dim)?,
            PriorKind::Gaussian { mean, std } => rng.gaussian_vec(mean, std, n * self.dim)?,
        };
        Matrix::from_vec(n, self.dim, values)
    }

    fn validate(&self) -> Result<(), NumError> {
        // a zero-draw sample exercises the same parameter checks
        self.sample(0, &mut RngState::new(0)).map(|_| ())
    }
}

/// Generator, discriminator and the prior feeding the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub prior: NoisePrior,
}

impl GanModel {
    pub fn new(generator: Mlp, discriminator: Mlp, prior: NoisePrior) -> Result<Self, GanError> {
        prior.validate()?;
        if generator.input_dim() != prior.dim {
            return Err(GanError::Architecture(format!(
                "generator takes {} inputs but the prior has dimension {}",
                generator.input_dim(),
                prior.dim
            )));
        }
        if generator.output_dim() != discriminator.input_dim() {
            return Err(GanError::Architecture(format!(
                "generator emits {} values but the discriminator reads {}",
                generator.output_dim(),
                discriminator.input_dim()
            )));
        }
        if discriminator.output_dim() != 1 || discriminator.output_activation() != Activation::Sigmoid {
            return Err(GanError::Architecture(
                "discriminator must end in a single sigmoid unit".into(),
            ));
        }
        Ok(GanModel {
            generator,
            discriminator,
            prior,
        })
    }

    pub fn data_dim(&self) -> usize {
        self.generator.output_dim()
    }
}

/// Hyper-parameters of the alternating minibatch loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Discriminator steps per generator step.
    #[serde(default = "default_k")]
    pub k: usize,
    pub batch_size: usize,
    pub lr_d: f64,
    pub lr_g: f64,
    pub momentum: f64,
    pub iterations: usize,
    #[serde(default)]
    pub generator_loss: GeneratorLoss,
    pub seed: u64,
    /// Both learning rates fall linearly from their base value to this
    /// fraction of it over the run. `1.0` keeps them constant.
    #[serde(default = "default_final_lr_scale")]
    pub final_lr_scale: f64,
}

fn default_k() -> usize {
    1
}

fn default_final_lr_scale() -> f64 {
    1.0
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GanError> {
        let bad = |msg: String| Err(GanError::Config(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.lr_d > 0.0 && self.lr_d.is_finite() && self.lr_g > 0.0 && self.lr_g.is_finite()) {
            return bad(format!("learning rates must be > 0, got lr_d {} lr_g {}", self.lr_d, self.lr_g));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} outside [0, 1)", self.momentum));
        }
        if !(self.final_lr_scale > 0.0 && self.final_lr_scale <= 1.0) {
            return bad(format!("final_lr_scale {} outside (0, 1]", self.final_lr_scale));
        }
        Ok(())
    }

    /// Learning-rate multiplier for outer iteration `iteration`.
    pub fn lr_scale(&self, iteration: usize) -> f64 {
        if self.iterations <= 1 {
            return 1.0;
        }
        let t = iteration as f64 / (self.iterations - 1) as f64;
        1.0 + (self.final_lr_scale - 1.0) * t
    }
}

#[derive(Debug, Error)]
pub enum GanError {
    #[error("architecture: {0}")]
    Architecture(String),
    #[error("config: {0}")]
    Config(String),
    #[error("batch: {0}")]
    Batch(String),
    #[error("non-finite {stage} objective ({value}) at iteration {iteration}")]
    NonFinite {
        stage: &'static str,
        value: f64,
        iteration: usize,
    },
    #[error("training diverged at iteration {iteration}; last good model kept")]
    Diverged {
        iteration: usize,
        source: Box<GanError>,
        last_good: Box<GanModel>,
        metrics: TrainMetrics,
    },
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// `n` generator samples, drawn in infer mode.
pub fn sample_generator(model: &GanModel, n: usize, rng: &mut RngState) -> Result<Matrix, GanError> {
    if n == 0 {
        return Err(GanError::Batch("need at least one sample".into()));
    }
    let z = model.prior.sample(n, rng)?;
    Ok(model.generator.predict(&z)?)
}

/// `G` along the straight line from `z_a` to `z_b`, `steps` rows including
/// both endpoints.
pub fn interpolate_latent(
    model: &GanModel,
    z_a: &[f64],
    z_b: &[f64],
    steps: usize,
) -> Result<Matrix, GanError> {
    if steps < 2 {
        return Err(GanError::Batch(format!("interpolation needs at least 2 steps, got {steps}")));
    }
    for z in [z_a, z_b] {
        if z.len() != model.prior.dim {
            return Err(GanError::Batch(format!(
                "latent vector has {} coordinates, prior has {}",
                z.len(),
                model.prior.dim
            )));
        }
    }
    let mut values = Vec::with_capacity(steps * z_a.len());
    for i in 0..steps {
        let t = i as f64 / (steps - 1) as f64;
        values.extend(z_a.iter().zip(z_b).map(|(a, b)| (1.0 - t) * a + t * b));
    }
    let z = Matrix::from_vec(steps, z_a.len(), values)?;
    Ok(model.generator.predict(&z)?)
}


#[cfg(test)]
mod tests {
    use super::test_support::small_model;
    use super::*;
    use crate::neural::LayerSpec;

    #[test]
    fn architecture_checks() {
        let mut rng = RngState::new(0);
        let g = Mlp::new(&[LayerSpec::new(2, 3, Activation::Linear)], &mut rng).unwrap();
        let d_ok = Mlp::new(&[LayerSpec::new(3, 1, Activation::Sigmoid)], &mut rng).unwrap();
        let d_wide = Mlp::new(&[LayerSpec::new(2, 1, Activation::Sigmoid)], &mut rng).unwrap();
        let d_linear = Mlp::new(&[LayerSpec::new(3, 1, Activation::Linear)], &mut rng).unwrap();
        let prior = NoisePrior::uniform(-1.0, 1.0, 2);
        assert!(GanModel::new(g.clone(), d_ok.clone(), prior).is_ok());
        assert!(GanModel::new(g.clone(), d_wide, prior).is_err());
        assert!(GanModel::new(g.clone(), d_linear, prior).is_err());
        assert!(GanModel::new(g.clone(), d_ok.clone(), NoisePrior::uniform(-1.0, 1.0, 3)).is_err());
        assert!(GanModel::new(g, d_ok, NoisePrior::gaussian(0.0, -1.0, 2)).is_err());
    }

    #[test]
    fn sample_shape_and_determinism() {
        let model = small_model(1);
        let a = sample_generator(&model, 17, &mut RngState::new(3)).unwrap();
        let b = sample_generator(&model, 17, &mut RngState::new(3)).unwrap();
        assert_eq!(a.shape(), (17, 1));
        assert_eq!(a, b);
        assert!(sample_generator(&model, 0, &mut RngState::new(3)).is_err());
    }

    #[test]
    fn identity_generator_reproduces_prior() {
        let mut rng = RngState::new(0);
        let mut g = Mlp::new(&[LayerSpec::new(1, 1, Activation::Linear)], &mut rng).unwrap();
        g.set_param_vector(&[1.0, 0.0]).unwrap();
        let d = Mlp::new(&[LayerSpec::new(1, 1, Activation::Sigmoid)], &mut rng).unwrap();
        let model = GanModel::new(g, d, NoisePrior::uniform(-1.0, 1.0, 1)).unwrap();
        let s = sample_generator(&model, 5000, &mut RngState::new(8)).unwrap();
        let z = model.prior.sample(5000, &mut RngState::new(8)).unwrap();
        assert_eq!(s, z);
        assert!(s.as_slice().iter().all(|&v| (-1.0..1.0).contains(&v)));
        assert!(s.mean().abs() < 0.05);
    }

    #[test]
    fn interpolation_contracts() {
        let model = small_model(2);
        let za = [0.3, -0.9];
        let zb = [-0.5, 0.8];
        let path = interpolate_latent(&model, &za, &zb, 5).unwrap();
        let ga = model.generator.predict(&Matrix::row_vector(&za).unwrap()).unwrap();
        let gb = model.generator.predict(&Matrix::row_vector(&zb).unwrap()).unwrap();
        assert_eq!(path.row(0), ga.row(0));
        assert_eq!(path.row(4), gb.row(0));
        let mid: Vec<f64> = za.iter().zip(&zb).map(|(a, b)| (a + b) / 2.0).collect();
        let gm = model.generator.predict(&Matrix::row_vector(&mid).unwrap()).unwrap();
        assert_eq!(path.row(2), gm.row(0));

        let two = interpolate_latent(&model, &za, &zb, 2).unwrap();
        assert_eq!(two.rows(), 2);
        assert_eq!(two.row(0), ga.row(0));
        assert_eq!(two.row(1), gb.row(0));

        assert!(interpolate_latent(&model, &za, &zb, 1).is_err());
        assert!(interpolate_latent(&model, &[0.0], &zb, 3).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig {
            k: 1,
            batch_size: 8,
            lr_d: 0.1,
            lr_g: 0.1,
            momentum: 0.5,
            iterations: 3,
            generator_loss: GeneratorLoss::NonSaturating,
            seed: 1,
            final_lr_scale: 1.0,
        };
        assert!(ok.validate().is_ok());
        assert!(TrainConfig { final_lr_scale: 0.0, ..ok.clone() }.validate().is_err());
        let decay = TrainConfig { iterations: 5, final_lr_scale: 0.2, ..ok.clone() };
        assert_eq!(decay.lr_scale(0), 1.0);
        assert!((decay.lr_scale(4) - 0.2).abs() < 1e-15);
        assert!((decay.lr_scale(2) - 0.6).abs() < 1e-15);
        assert!(TrainConfig { k: 0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { momentum: 1.0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { lr_g: 0.0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..ok }.validate().is_err());
    }
}
