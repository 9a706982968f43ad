//! Reference distributions with exact densities, datasets, and the IDX and
//! CSV file formats.

mod dataset;
mod distribution;
mod idx;
mod points;

pub use dataset::{split, Dataset};
pub use distribution::{Distribution, DistributionKind};
pub use idx::{load_idx, load_idx_pair, parse_idx, write_idx_images, write_idx_labels, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use points::{read_points_csv, read_provenance, write_points_csv, write_provenance, Provenance};

use thiserror::Error;

use crate::numkit::NumError;
use crate::theory::TheoryError;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("point has {got} coordinates, distribution has dimension {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("operation needs a 1-D distribution, got dimension {0}")]
    NotOneDimensional(usize),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("IDX {path} at byte offset {offset}: {reason}")]
    Idx { path: String, offset: usize, reason: String },
    #[error("CSV {path} line {line}: {reason}")]
    Csv { path: String, line: usize, reason: String },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

impl DataError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
