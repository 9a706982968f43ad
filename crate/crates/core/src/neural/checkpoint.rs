//! Versioned JSON checkpoint for a single [`Mlp`].
//!
//! Layout:
//!
//! ```text
//! {"format":"gan-mlp","version":1,"mlp":{"layers":[...],"params":[...],"velocity":[...]}}
//! ```
//!
//! Each `layers` entry is `{"in_dim","out_dim","activation":{"kind",..},"dropout_rate"}`.
//! `params` and `velocity` hold one `{"weights","bias"}` pair per layer, each
//! a `{"rows","cols","values"}` matrix in row-major order. Floats are written
//! in shortest round-trip form, so a save/load cycle is bit-exact.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Mlp;

pub const MLP_FORMAT: &str = "gan-mlp";
pub const MLP_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("cannot access checkpoint {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("malformed checkpoint: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("checkpoint format {found:?} version {version}, expected {expected:?} version {expected_version}")]
    Format {
        found: String,
        version: u32,
        expected: &'static str,
        expected_version: u32,
    },
}

#[derive(Serialize)]
struct RecordOut<'a> {
    format: &'a str,
    version: u32,
    mlp: &'a Mlp,
}

#[derive(Deserialize)]
struct RecordIn {
    format: String,
    version: u32,
    mlp: Mlp,
}

pub fn write_mlp(mlp: &Mlp) -> String {
    serde_json::to_string(&RecordOut {
        format: MLP_FORMAT,
        version: MLP_FORMAT_VERSION,
        mlp,
    })
    .expect("checkpoint serialization is infallible")
}

pub fn read_mlp(text: &str) -> Result<Mlp, CheckpointError> {
    let record: RecordIn = serde_json::from_str(text)?;
    if record.format != MLP_FORMAT || record.version != MLP_FORMAT_VERSION {
        return Err(CheckpointError::Format {
            found: record.format,
            version: record.version,
            expected: MLP_FORMAT,
            expected_version: MLP_FORMAT_VERSION,
        });
    }
    Ok(record.mlp)
}

pub fn save_mlp(mlp: &Mlp, path: &Path) -> Result<(), CheckpointError> {
    fs::write(path, write_mlp(mlp)).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_mlp(path: &Path) -> Result<Mlp, CheckpointError> {
    let text = fs::read_to_string(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_mlp(&text)
}
