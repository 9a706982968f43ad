use super::objective::{mean_ln, mean_ln_complement, safe_ln_prime};
use super::{GanError, GanModel, GeneratorLoss, TrainConfig};
use crate::neural::{Direction, Gradients, Mode};
use crate::numkit::{Matrix, RngState};

/// Result of one player's update.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// Discriminator: `mean log D(x) + mean log(1 - D(G(z)))` (ascended).
    /// Generator: mean generator loss (descended).
    pub objective: f64,
    pub grads: Gradients,
    pub mean_d_real: f64,
    pub mean_d_fake: f64,
}

fn check_rows(what: &str, batch: &Matrix, expected: usize) -> Result<(), GanError> {
    if batch.rows() != expected {
        return Err(GanError::Batch(format!(
            "{what} batch has {} rows, expected {expected}",
            batch.rows()
        )));
    }
    Ok(())
}

/// Gradient of the discriminator objective with respect to `θ_d`, without
/// applying it. The generator is evaluated in infer mode.
pub fn discriminator_gradients(
    model: &GanModel,
    data_batch: &Matrix,
    noise_batch: &Matrix,
    mode: Mode,
    rng: &mut RngState,
) -> Result<StepOutcome, GanError> {
    if data_batch.rows() == 0 || noise_batch.rows() == 0 {
        return Err(GanError::Batch("discriminator step needs non-empty batches".into()));
    }
    let fakes = model.generator.predict(noise_batch)?;
    let d = &model.discriminator;
    let real_acts = d.forward(data_batch, mode, rng)?;
    let fake_acts = d.forward(&fakes, mode, rng)?;
    let d_real = real_acts.output();
    let d_fake = fake_acts.output();
    let objective = mean_ln(d_real) + mean_ln_complement(d_fake);

    let m_real = data_batch.rows() as f64;
    let m_fake = noise_batch.rows() as f64;
    let up_real = d_real.map(|v| safe_ln_prime(v) / m_real);
    let up_fake = d_fake.map(|v| -safe_ln_prime(1.0 - v) / m_fake);
    let grads = d.backward(&real_acts, &up_real)?.add(&d.backward(&fake_acts, &up_fake)?)?;
    Ok(StepOutcome {
        objective,
        grads,
        mean_d_real: d_real.mean(),
        mean_d_fake: d_fake.mean(),
    })
}

/// One momentum-ascent step on the discriminator objective. `θ_g` is not
/// touched.
pub fn discriminator_step(
    model: &mut GanModel,
    data_batch: &Matrix,
    noise_batch: &Matrix,
    cfg: &TrainConfig,
    rng: &mut RngState,
) -> Result<StepOutcome, GanError> {
    check_rows("data", data_batch, cfg.batch_size)?;
    check_rows("noise", noise_batch, cfg.batch_size)?;
    let outcome = discriminator_gradients(model, data_batch, noise_batch, Mode::Train, rng)?;
    if !outcome.objective.is_finite() || !outcome.grads.all_finite() {
        return Err(GanError::NonFinite {
            stage: "discriminator",
            value: outcome.objective,
            iteration: 0,
        });
    }
    model
        .discriminator
        .sgd_momentum_step(&outcome.grads, cfg.lr_d, cfg.momentum, Direction::Ascend)?;
    Ok(outcome)
}

/// Gradient of the mean generator loss with respect to `θ_g`, taken through
/// a frozen discriminator.
pub fn generator_gradients(
    model: &GanModel,
    noise_batch: &Matrix,
    loss: GeneratorLoss,
    mode: Mode,
    rng: &mut RngState,
) -> Result<StepOutcome, GanError> {
    if noise_batch.rows() == 0 {
        return Err(GanError::Batch("generator step needs a non-empty batch".into()));
    }
    let g_acts = model.generator.forward(noise_batch, mode, rng)?;
    let d_acts = model.discriminator.forward(g_acts.output(), mode, rng)?;
    let d = d_acts.output();
    let m = noise_batch.rows() as f64;
    let objective = d.as_slice().iter().map(|&v| loss.loss(v)).sum::<f64>() / m;
    let upstream = d.map(|v| loss.dloss_dd(v) / m);
    let (_, into_g) = model.discriminator.backprop(&d_acts, &upstream)?;
    let grads = model.generator.backward(&g_acts, &into_g)?;
    Ok(StepOutcome {
        objective,
        grads,
        mean_d_real: f64::NAN,
        mean_d_fake: d.mean(),
    })
}

/// One momentum-descent step on the generator loss. `θ_d` is not touched.
pub fn generator_step(
    model: &mut GanModel,
    noise_batch: &Matrix,
    cfg: &TrainConfig,
    rng: &mut RngState,
) -> Result<StepOutcome, GanError> {
    check_rows("noise", noise_batch, cfg.batch_size)?;
    let outcome = generator_gradients(model, noise_batch, cfg.generator_loss, Mode::Train, rng)?;
    if !outcome.objective.is_finite() || !outcome.grads.all_finite() {
        return Err(GanError::NonFinite {
            stage: "generator",
            value: outcome.objective,
            iteration: 0,
        });
    }
    model
        .generator
        .sgd_momentum_step(&outcome.grads, cfg.lr_g, cfg.momentum, Direction::Descend)?;
    Ok(outcome)
}
