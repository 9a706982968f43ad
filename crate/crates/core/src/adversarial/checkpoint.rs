//! Whole-model checkpoint: both networks (with momentum buffers) and the
//! prior.
//!
//! ```text
//! {"format":"gan-model","version":1,"prior":{"kind":"uniform","lo":..,"hi":..,"dim":..},
//!  "generator":<mlp>,"discriminator":<mlp>}
//! ```
//!
//! `<mlp>` uses the same layout as the single-network format in
//! [`crate::neural`]. Floats are shortest round-trip, so save/load is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GanModel, NoisePrior};
use crate::neural::{CheckpointError, Mlp};

pub const MODEL_FORMAT: &str = "gan-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct RecordOut<'a> {
    format: &'a str,
    version: u32,
    prior: &'a NoisePrior,
    generator: &'a Mlp,
    discriminator: &'a Mlp,
}

#[derive(Deserialize)]
struct RecordIn {
    format: String,
    version: u32,
    prior: NoisePrior,
    generator: Mlp,
    discriminator: Mlp,
}

pub fn write_model(model: &GanModel) -> String {
    serde_json::to_string(&RecordOut {
        format: MODEL_FORMAT,
        version: MODEL_FORMAT_VERSION,
        prior: &model.prior,
        generator: &model.generator,
        discriminator: &model.discriminator,
    })
    .expect("checkpoint serialization is infallible")
}

pub fn read_model(text: &str) -> Result<GanModel, CheckpointError> {
    let record: RecordIn = serde_json::from_str(text)?;
    if record.format != MODEL_FORMAT || record.version != MODEL_FORMAT_VERSION {
        return Err(CheckpointError::Format {
            found: record.format,
            version: record.version,
            expected: MODEL_FORMAT,
            expected_version: MODEL_FORMAT_VERSION,
        });
    }
    GanModel::new(record.generator, record.discriminator, record.prior).map_err(|e| {
        CheckpointError::Parse(serde::de::Error::custom(e.to_string()))
    })
}

pub fn save_model(model: &GanModel, path: &Path) -> Result<(), CheckpointError> {
    fs::write(path, write_model(model)).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<GanModel, CheckpointError> {
    let text = fs::read_to_string(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_model(&text)
}
