use serde::{Deserialize, Serialize};

use super::{GanError, GanModel};
use crate::numkit::Matrix;

/// Floor applied to every logarithm argument, so a saturated discriminator
/// gives a large finite penalty instead of `-inf`.
pub const LOG_EPS: f64 = 1e-12;

pub fn safe_ln(x: f64) -> f64 {
    x.max(LOG_EPS).ln()
}

/// Derivative of [`safe_ln`]; zero on the clamped region.
pub(crate) fn safe_ln_prime(x: f64) -> f64 {
    if x > LOG_EPS {
        1.0 / x
    } else {
        0.0
    }
}

/// Which objective the generator minimizes, as a function of `d = D(G(z))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorLoss {
    /// `log(1 - d)`, the minimax form.
    Saturating,
    /// `-log d`, i.e. maximizing `log d`. Same fixed point, but it keeps a
    /// strong gradient while the discriminator still rejects the samples.
    #[default]
    NonSaturating,
}

impl GeneratorLoss {
    pub fn loss(self, d: f64) -> f64 {
        match self {
            GeneratorLoss::Saturating => safe_ln(1.0 - d),
            GeneratorLoss::NonSaturating => -safe_ln(d),
        }
    }

    /// `∂loss/∂d`: `-1/(1-d)` or `-1/d`.
    pub fn dloss_dd(self, d: f64) -> f64 {
        match self {
            GeneratorLoss::Saturating => -safe_ln_prime(1.0 - d),
            GeneratorLoss::NonSaturating => -safe_ln_prime(d),
        }
    }

    /// Derivative through the sigmoid, with respect to the discriminator's
    /// pre-sigmoid output: `-d` or `-(1-d)`.
    pub fn dloss_dlogit(self, d: f64) -> f64 {
        self.dloss_dd(d) * d * (1.0 - d)
    }
}

pub(crate) fn mean_ln(values: &Matrix) -> f64 {
    values.as_slice().iter().map(|&d| safe_ln(d)).sum::<f64>() / values.rows() as f64
}

pub(crate) fn mean_ln_complement(values: &Matrix) -> f64 {
    values.as_slice().iter().map(|&d| safe_ln(1.0 - d)).sum::<f64>() / values.rows() as f64
}

/// Monte-Carlo estimate of the game value on a data and a noise minibatch:
/// `mean log D(x) + mean log(1 - D(G(z)))`, in infer mode.
pub fn value_estimate(model: &GanModel, data_batch: &Matrix, noise_batch: &Matrix) -> Result<f64, GanError> {
    if data_batch.rows() == 0 || noise_batch.rows() == 0 {
        return Err(GanError::Batch("value estimate needs non-empty batches".into()));
    }
    let d_real = model.discriminator.predict(data_batch)?;
    let fakes = model.generator.predict(noise_batch)?;
    let d_fake = model.discriminator.predict(&fakes)?;
    Ok(mean_ln(&d_real) + mean_ln_complement(&d_fake))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversarial::test_support::small_model;
    use crate::adversarial::NoisePrior;
    use crate::neural::{Activation, LayerSpec, Mlp};
    use crate::numkit::RngState;
    use crate::theory::NEG_LOG_4;

    #[test]
    fn half_discriminator_gives_neg_log_4() {
        let mut model = small_model(3);
        let n = model.discriminator.param_count();
        model.discriminator.set_param_vector(&vec![0.0; n]).unwrap();
        let mut rng = RngState::new(1);
        let x = Matrix::from_vec(6, 1, rng.gaussian_vec(0.0, 1.0, 6).unwrap()).unwrap();
        let z = model.prior.sample(9, &mut rng).unwrap();
        assert!((value_estimate(&model, &x, &z).unwrap() - NEG_LOG_4).abs() < 1e-15);
    }

    #[test]
    fn perfect_discriminator_limit() {
        // pre-clamp idealization: D = 1 on data, 0 on fakes
        let ones = Matrix::filled(4, 1, 1.0);
        let zeros = Matrix::filled(4, 1, 0.0);
        assert_eq!(mean_ln(&ones) + mean_ln_complement(&zeros), 0.0);
        // a nearly perfect real network approaches it from below
        let mut rng = RngState::new(0);
        let g = Mlp::new(&[LayerSpec::new(1, 1, Activation::Linear)], &mut rng).unwrap();
        let mut d = Mlp::new(&[LayerSpec::new(1, 1, Activation::Sigmoid)], &mut rng).unwrap();
        d.set_param_vector(&[40.0, 0.0]).unwrap();
        let mut g = g;
        g.set_param_vector(&[1.0, -10.0]).unwrap();
        let model = GanModel::new(g, d, NoisePrior::uniform(0.0, 1.0, 1)).unwrap();
        let x = Matrix::filled(3, 1, 5.0);
        let z = Matrix::filled(3, 1, 0.5);
        let v = value_estimate(&model, &x, &z).unwrap();
        assert!(v <= 0.0 && v > -1e-12);
    }

    #[test]
    fn matches_scalar_loop_oracle() {
        let model = small_model(5);
        let mut rng = RngState::new(9);
        let x = Matrix::from_vec(8, 1, rng.gaussian_vec(0.5, 1.0, 8).unwrap()).unwrap();
        let z = model.prior.sample(8, &mut rng).unwrap();
        let mut oracle = 0.0;
        for i in 0..8 {
            let xi = Matrix::row_vector(x.row(i)).unwrap();
            oracle += model.discriminator.predict(&xi).unwrap()[(0, 0)].ln() / 8.0;
            let zi = Matrix::row_vector(z.row(i)).unwrap();
            let gi = model.generator.predict(&zi).unwrap();
            oracle += (1.0 - model.discriminator.predict(&gi).unwrap()[(0, 0)]).ln() / 8.0;
        }
        assert!((value_estimate(&model, &x, &z).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn concatenation_is_size_weighted_mean() {
        let model = small_model(6);
        let mut rng = RngState::new(10);
        let x1 = Matrix::from_vec(5, 1, rng.gaussian_vec(0.0, 1.0, 5).unwrap()).unwrap();
        let x2 = Matrix::from_vec(11, 1, rng.gaussian_vec(0.0, 1.0, 11).unwrap()).unwrap();
        let z1 = model.prior.sample(5, &mut rng).unwrap();
        let z2 = model.prior.sample(11, &mut rng).unwrap();
        let whole = value_estimate(&model, &x1.vstack(&x2).unwrap(), &z1.vstack(&z2).unwrap()).unwrap();
        let weighted = (5.0 * value_estimate(&model, &x1, &z1).unwrap()
            + 11.0 * value_estimate(&model, &x2, &z2).unwrap())
            / 16.0;
        assert!((whole - weighted).abs() < 1e-12);
    }

    #[test]
    fn empty_batches_rejected() {
        let model = small_model(1);
        assert!(value_estimate(&model, &Matrix::zeros(0, 1), &Matrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn both_losses_decrease_in_d() {
        for i in 1..200 {
            let d = i as f64 / 200.0;
            let s = GeneratorLoss::Saturating.dloss_dd(d);
            let n = GeneratorLoss::NonSaturating.dloss_dd(d);
            assert!(s < 0.0 && n < 0.0);
            assert_eq!(s.signum(), n.signum());
            let e = 1e-7;
            for mode in [GeneratorLoss::Saturating, GeneratorLoss::NonSaturating] {
                assert!(mode.loss(d + e) < mode.loss(d));
            }
        }
        for d in [0.1, 0.5, 0.9] {
            assert!((GeneratorLoss::Saturating.dloss_dd(d) + 1.0 / (1.0 - d)).abs() < 1e-12);
            assert!((GeneratorLoss::NonSaturating.dloss_dd(d) + 1.0 / d).abs() < 1e-12);
        }
    }

    #[test]
    fn saturation_profile() {
        // through the sigmoid: saturating gives -d, non-saturating -(1-d)
        let sat = |d: f64| GeneratorLoss::Saturating.dloss_dlogit(d).abs();
        let ns = |d: f64| GeneratorLoss::NonSaturating.dloss_dlogit(d).abs();
        assert!((sat(0.999) - 0.999).abs() < 1e-12 && (ns(0.999) - 0.001).abs() < 1e-12);
        assert!(sat(0.999) > ns(0.999));
        assert!(sat(0.001) < ns(0.001));
    }
}
