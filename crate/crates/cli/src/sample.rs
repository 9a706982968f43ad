use std::path::Path;

use gan_core::adversarial::{interpolate_latent, load_model, sample_generator, GanModel};
use gan_core::numkit::{Matrix, RngState};

use crate::error::{CliError, CliResult};
use crate::output::{points_csv, write_atomic};

fn load(checkpoint: &Path) -> CliResult<GanModel> {
    if !checkpoint.exists() {
        return Err(CliError::input(format!("checkpoint not found: {}", checkpoint.display())));
    }
    load_model(checkpoint).map_err(CliError::input)
}

/// `n` generator samples, one CSV row each.
pub fn cmd_sample(checkpoint: &Path, n: usize, out: &Path, seed: u64) -> CliResult<Matrix> {
    let model = load(checkpoint)?;
    let samples = sample_generator(&model, n, &mut RngState::new(seed)).map_err(CliError::input)?;
    write_atomic(out, points_csv(&samples).as_bytes())?;
    Ok(samples)
}

/// `G` along the segment between two latent points, `steps` rows. Endpoints
/// default to the first two prior draws under `seed`, which are the same
/// draws `cmd_sample` uses for its first two rows.
pub fn cmd_interpolate(
    checkpoint: &Path,
    steps: usize,
    out: &Path,
    seed: u64,
    endpoints: Option<(Vec<f64>, Vec<f64>)>,
) -> CliResult<Matrix> {
    let model = load(checkpoint)?;
    let (za, zb) = match endpoints {
        Some(pair) => pair,
        None => {
            let z = model.prior.sample(2, &mut RngState::new(seed)).map_err(CliError::input)?;
            (z.row(0).to_vec(), z.row(1).to_vec())
        }
    };
    let path = interpolate_latent(&model, &za, &zb, steps).map_err(CliError::input)?;
    write_atomic(out, points_csv(&path).as_bytes())?;
    Ok(path)
}
