//! Numerical substrate shared by every other module: a dense row-major
//! [`Matrix`], a seeded [`RngState`], and overflow-safe scalar helpers.

mod matrix;
mod rng;
mod scalar;

pub use matrix::Matrix;
pub use rng::RngState;
pub use scalar::{log_sum_exp, sigmoid};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("shape mismatch in {op}: left is {left:?}, right is {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix of shape {rows}x{cols} needs {expected} values, got {got}")]
    BadLength {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("empty input to {0}")]
    Empty(&'static str),
    #[error("invalid sampler parameters: {0}")]
    InvalidParams(String),
}
