//! Multilayer perceptrons with exact backpropagation.
//!
//! Each layer computes `act(dropout(x) · W + b)`. Dropout (inverted, so
//! inference needs no rescaling) acts on the layer *input*. A maxout layer
//! with `k` pieces stores `k` affine maps per output unit. Piece `j` of unit
//! `u` lives in column `u * k + j` of the weight and bias blocks.

mod checkpoint;
mod mlp;

pub use checkpoint::{load_mlp, read_mlp, save_mlp, write_mlp, CheckpointError, MLP_FORMAT, MLP_FORMAT_VERSION};
pub use mlp::{dropout_mask, Activations, Direction, Gradients, LayerParams, LayerTrace, Mlp, Mode};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::NumError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
    Tanh,
    Maxout { pieces: usize },
}

impl Activation {
    /// Affine pieces per output unit.
    pub fn pieces(self) -> usize {
        match self {
            Activation::Maxout { pieces } => pieces,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    #[serde(default)]
    pub dropout_rate: f64,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        LayerSpec {
            in_dim,
            out_dim,
            activation,
            dropout_rate: 0.0,
        }
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout_rate = rate;
        self
    }

    /// Columns of the pre-activation: `out_dim * pieces`.
    pub fn width(&self) -> usize {
        self.out_dim * self.activation.pieces()
    }

    pub fn param_count(&self) -> usize {
        self.activation.pieces() * (self.in_dim + 1) * self.out_dim
    }

    fn validate(&self, index: usize) -> Result<(), NeuralError> {
        let bad = |reason: String| Err(NeuralError::InvalidLayer { index, reason });
        if self.in_dim == 0 || self.out_dim == 0 {
            return bad("dimensions must be positive".into());
        }
        if let Activation::Maxout { pieces } = self.activation {
            if pieces < 2 {
                return bad(format!("maxout needs at least 2 pieces, got {pieces}"));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout rate {} outside [0, 1)", self.dropout_rate));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("an MLP needs at least one layer")]
    NoLayers,
    #[error("layer {index}: {reason}")]
    InvalidLayer { index: usize, reason: String },
    #[error("layer {index} expects {expected} inputs but the previous layer produces {got}")]
    BrokenChain { index: usize, expected: usize, got: usize },
    #[error("input has {got} columns, network expects {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("activations are stale: recorded at revision {recorded}, network is at {current}")]
    StaleActivations { recorded: u64, current: u64 },
    #[error("activations do not match this network: {0}")]
    MismatchedActivations(String),
    #[error("gradient blocks do not match parameter shapes")]
    GradientShape,
    #[error("dropout rate {0} outside [0, 1)")]
    InvalidDropout(f64),
    #[error("invalid optimizer setting: {0}")]
    InvalidOptimizer(String),
    #[error(transparent)]
    Num(#[from] NumError),
}
