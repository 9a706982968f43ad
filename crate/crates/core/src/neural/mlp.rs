use serde::{Deserialize, Serialize};

use super::{Activation, LayerSpec, NeuralError};
use crate::numkit::{sigmoid, Matrix, NumError, RngState};

/// Weight block `(in_dim, width)` and bias row `(1, width)` of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Matrix,
    pub bias: Matrix,
}

impl LayerParams {
    fn zeros_for(spec: &LayerSpec) -> Self {
        LayerParams {
            weights: Matrix::zeros(spec.in_dim, spec.width()),
            bias: Matrix::zeros(1, spec.width()),
        }
    }

    fn same_shape(&self, other: &LayerParams) -> bool {
        self.weights.shape() == other.weights.shape() && self.bias.shape() == other.bias.shape()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout masks are drawn and applied.
    Train,
    /// Deterministic pass, no masks.
    Infer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Ascend,
    Descend,
}

/// Multilayer perceptron with per-layer parameters and momentum buffers.
///
/// Equality compares layers, parameters and velocity; the internal revision
/// counter is ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawMlp")]
pub struct Mlp {
    layers: Vec<LayerSpec>,
    params: Vec<LayerParams>,
    velocity: Vec<LayerParams>,
    // bumped on every parameter write so stale activations can be refused
    #[serde(skip)]
    revision: u64,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers && self.params == other.params && self.velocity == other.velocity
    }
}

#[derive(Deserialize)]
struct RawMlp {
    layers: Vec<LayerSpec>,
    params: Vec<LayerParams>,
    velocity: Vec<LayerParams>,
}

impl TryFrom<RawMlp> for Mlp {
    type Error = NeuralError;

    fn try_from(raw: RawMlp) -> Result<Self, NeuralError> {
        validate_chain(&raw.layers)?;
        let expected: Vec<LayerParams> = raw.layers.iter().map(LayerParams::zeros_for).collect();
        let congruent = |blocks: &[LayerParams]| {
            blocks.len() == expected.len()
                && blocks.iter().zip(&expected).all(|(b, e)| b.same_shape(e))
        };
        if !congruent(&raw.params) || !congruent(&raw.velocity) {
            return Err(NeuralError::GradientShape);
        }
        Ok(Mlp {
            layers: raw.layers,
            params: raw.params,
            velocity: raw.velocity,
            revision: 0,
        })
    }
}

fn validate_chain(layers: &[LayerSpec]) -> Result<(), NeuralError> {
    if layers.is_empty() {
        return Err(NeuralError::NoLayers);
    }
    for (i, spec) in layers.iter().enumerate() {
        spec.validate(i)?;
        if i > 0 && layers[i - 1].out_dim != spec.in_dim {
            return Err(NeuralError::BrokenChain {
                index: i,
                expected: spec.in_dim,
                got: layers[i - 1].out_dim,
            });
        }
    }
    Ok(())
}

/// What one layer saw and produced during a forward pass.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    /// Layer input after the dropout mask was applied.
    pub input: Matrix,
    pub mask: Option<Matrix>,
    pub pre_activation: Matrix,
    pub output: Matrix,
    /// Winning piece per (row, unit) for maxout layers.
    pub argmax: Option<Vec<usize>>,
}

/// Per-layer record of a forward pass, consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct Activations {
    layers: Vec<LayerTrace>,
    revision: u64,
}

impl Activations {
    pub fn output(&self) -> &Matrix {
        &self.layers.last().expect("at least one layer").output
    }

    pub fn layers(&self) -> &[LayerTrace] {
        &self.layers
    }

    pub fn into_output(mut self) -> Matrix {
        self.layers.pop().expect("at least one layer").output
    }

    /// FNV-1a hash over every dropout mask in the pass.
    pub fn mask_fingerprint(&self) -> u64 {
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        let mut feed = |x: u64| {
            for byte in x.to_le_bytes() {
                hash ^= u64::from(byte);
                hash = hash.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for (i, layer) in self.layers.iter().enumerate() {
            if let Some(mask) = &layer.mask {
                feed(i as u64);
                for v in mask.as_slice() {
                    feed(v.to_bits());
                }
            }
        }
        hash
    }
}

/// Parameter-shaped gradient blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    blocks: Vec<LayerParams>,
    mask_fingerprint: u64,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Gradients {
            blocks: mlp.layers.iter().map(LayerParams::zeros_for).collect(),
            mask_fingerprint: 0,
        }
    }

    pub fn blocks(&self) -> &[LayerParams] {
        &self.blocks
    }

    /// Fingerprint of the dropout masks the gradient was computed with.
    pub fn mask_fingerprint(&self) -> u64 {
        self.mask_fingerprint
    }

    /// Flattened in the same order as [`Mlp::param_vector`].
    pub fn to_vec(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .flat_map(|b| b.weights.as_slice().iter().chain(b.bias.as_slice()))
            .copied()
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.to_vec().iter().all(|&g| g == 0.0)
    }

    pub fn all_finite(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.weights.all_finite() && b.bias.all_finite())
    }

    /// Element-wise sum; shapes must agree.
    pub fn add(&self, other: &Gradients) -> Result<Gradients, NeuralError> {
        if self.blocks.len() != other.blocks.len()
            || !self.blocks.iter().zip(&other.blocks).all(|(a, b)| a.same_shape(b))
        {
            return Err(NeuralError::GradientShape);
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                Ok(LayerParams {
                    weights: a.weights.add(&b.weights)?,
                    bias: a.bias.add(&b.bias)?,
                })
            })
            .collect::<Result<_, NumError>>()?;
        Ok(Gradients {
            blocks,
            mask_fingerprint: self.mask_fingerprint ^ other.mask_fingerprint.rotate_left(1),
        })
    }
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, else
/// `1 / (1 - rate)`. A zero rate gives all ones and draws nothing.
pub fn dropout_mask(
    rows: usize,
    cols: usize,
    rate: f64,
    rng: &mut RngState,
) -> Result<Matrix, NeuralError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NeuralError::InvalidDropout(rate));
    }
    if rate == 0.0 {
        return Ok(Matrix::filled(rows, cols, 1.0));
    }
    let keep = 1.0 / (1.0 - rate);
    let values = (0..rows * cols)
        .map(|_| if rng.next_f64() < rate { 0.0 } else { keep })
        .collect();
    Ok(Matrix::from_vec(rows, cols, values)?)
}

impl Mlp {
    /// Weights uniform in `[-s, s]` with `s = sqrt(6 / (in_dim + out_dim))`,
    /// biases and velocity zero.
    pub fn new(specs: &[LayerSpec], rng: &mut RngState) -> Result<Self, NeuralError> {
        validate_chain(specs)?;
        let params = specs
            .iter()
            .map(|spec| {
                let s = init_scale(spec);
                let n = spec.in_dim * spec.width();
                Ok(LayerParams {
                    weights: Matrix::from_vec(spec.in_dim, spec.width(), rng.uniform_vec(-s, s, n)?)?,
                    bias: Matrix::zeros(1, spec.width()),
                })
            })
            .collect::<Result<Vec<_>, NumError>>()?;
        Ok(Mlp {
            velocity: specs.iter().map(LayerParams::zeros_for).collect(),
            layers: specs.to_vec(),
            params,
            revision: 0,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[LayerParams] {
        &self.params
    }

    pub fn velocity(&self) -> &[LayerParams] {
        &self.velocity
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn output_activation(&self) -> Activation {
        self.layers[self.layers.len() - 1].activation
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// All parameters flattened layer by layer, weights (row-major) then bias.
    pub fn param_vector(&self) -> Vec<f64> {
        self.params
            .iter()
            .flat_map(|b| b.weights.as_slice().iter().chain(b.bias.as_slice()))
            .copied()
            .collect()
    }

    /// Overwrites the parameters from a vector laid out as [`Mlp::param_vector`].
    pub fn set_param_vector(&mut self, values: &[f64]) -> Result<(), NeuralError> {
        if values.len() != self.param_count() {
            return Err(NeuralError::GradientShape);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(NumError::NonFinite { index }.into());
        }
        let mut rest = values;
        for block in &mut self.params {
            for target in [&mut block.weights, &mut block.bias] {
                let n = target.as_slice().len();
                target.as_mut_slice().copy_from_slice(&rest[..n]);
                rest = &rest[n..];
            }
        }
        self.revision += 1;
        Ok(())
    }

    /// Direct mutable access to one layer's parameters.
    pub fn layer_params_mut(&mut self, index: usize) -> &mut LayerParams {
        self.revision += 1;
        &mut self.params[index]
    }

    pub fn forward(
        &self,
        batch: &Matrix,
        mode: Mode,
        rng: &mut RngState,
    ) -> Result<Activations, NeuralError> {
        if batch.cols() != self.input_dim() {
            return Err(NeuralError::WidthMismatch {
                expected: self.input_dim(),
                got: batch.cols(),
            });
        }
        let mut traces: Vec<LayerTrace> = Vec::with_capacity(self.layers.len());
        for (spec, block) in self.layers.iter().zip(&self.params) {
            let x = traces.last().map_or(batch, |t| &t.output);
            let mask = match mode {
                Mode::Train if spec.dropout_rate > 0.0 => {
                    Some(dropout_mask(x.rows(), x.cols(), spec.dropout_rate, rng)?)
                }
                _ => None,
            };
            let input = match &mask {
                Some(m) => x.hadamard(m)?,
                None => x.clone(),
            };
            let pre_activation = input.matmul(&block.weights)?.add_row_broadcast(&block.bias)?;
            let (output, argmax) = activate(spec.activation, &pre_activation, spec.out_dim);
            traces.push(LayerTrace {
                input,
                mask,
                pre_activation,
                output,
                argmax,
            });
        }
        Ok(Activations {
            layers: traces,
            revision: self.revision,
        })
    }

    /// Infer-mode output only.
    pub fn predict(&self, batch: &Matrix) -> Result<Matrix, NeuralError> {
        // infer mode never touches the rng
        let mut unused = RngState::new(0);
        Ok(self.forward(batch, Mode::Infer, &mut unused)?.into_output())
    }

    /// Parameter gradients of the scalar loss whose gradient with respect to
    /// the network output is `upstream`.
    pub fn backward(
        &self,
        activations: &Activations,
        upstream: &Matrix,
    ) -> Result<Gradients, NeuralError> {
        Ok(self.backprop(activations, upstream)?.0)
    }

    /// Like [`Mlp::backward`] but also returns the gradient with respect to
    /// the network input.
    pub fn backprop(
        &self,
        activations: &Activations,
        upstream: &Matrix,
    ) -> Result<(Gradients, Matrix), NeuralError> {
        self.check_activations(activations)?;
        if upstream.shape() != activations.output().shape() {
            return Err(NeuralError::MismatchedActivations(format!(
                "upstream gradient is {:?}, output is {:?}",
                upstream.shape(),
                activations.output().shape()
            )));
        }
        let mut blocks = Vec::with_capacity(self.layers.len());
        let mut delta = upstream.clone();
        for ((spec, block), trace) in self
            .layers
            .iter()
            .zip(&self.params)
            .zip(&activations.layers)
            .rev()
        {
            let d_pre = activation_backward(spec, trace, &delta)?;
            blocks.push(LayerParams {
                weights: trace.input.t_matmul(&d_pre)?,
                bias: d_pre.sum_rows(),
            });
            let d_input = d_pre.matmul_t(&block.weights)?;
            delta = match &trace.mask {
                Some(mask) => d_input.hadamard(mask)?,
                None => d_input,
            };
        }
        blocks.reverse();
        Ok((
            Gradients {
                blocks,
                mask_fingerprint: activations.mask_fingerprint(),
            },
            delta,
        ))
    }

    fn check_activations(&self, acts: &Activations) -> Result<(), NeuralError> {
        if acts.revision != self.revision {
            return Err(NeuralError::StaleActivations {
                recorded: acts.revision,
                current: self.revision,
            });
        }
        if acts.layers.len() != self.layers.len() {
            return Err(NeuralError::MismatchedActivations(format!(
                "{} layer traces for {} layers",
                acts.layers.len(),
                self.layers.len()
            )));
        }
        for (i, (spec, trace)) in self.layers.iter().zip(&acts.layers).enumerate() {
            if trace.input.cols() != spec.in_dim
                || trace.pre_activation.cols() != spec.width()
                || trace.output.cols() != spec.out_dim
            {
                return Err(NeuralError::MismatchedActivations(format!(
                    "layer {i} trace shapes do not match its spec"
                )));
            }
        }
        Ok(())
    }

    /// `v ← momentum·v + lr·g`, then `θ ← θ + v` (ascend) or `θ ← θ − v`
    /// (descend).
    pub fn sgd_momentum_step(
        &mut self,
        grads: &Gradients,
        lr: f64,
        momentum: f64,
        direction: Direction,
    ) -> Result<(), NeuralError> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(NeuralError::InvalidOptimizer(format!("learning rate {lr} must be > 0")));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(NeuralError::InvalidOptimizer(format!(
                "momentum {momentum} outside [0, 1)"
            )));
        }
        if grads.blocks.len() != self.params.len()
            || !grads.blocks.iter().zip(&self.params).all(|(g, p)| g.same_shape(p))
        {
            return Err(NeuralError::GradientShape);
        }
        let sign = match direction {
            Direction::Ascend => 1.0,
            Direction::Descend => -1.0,
        };
        for ((param, vel), grad) in self.params.iter_mut().zip(&mut self.velocity).zip(&grads.blocks) {
            for (p, (v, g)) in [
                (&mut param.weights, (&mut vel.weights, &grad.weights)),
                (&mut param.bias, (&mut vel.bias, &grad.bias)),
            ] {
                for ((p, v), g) in p
                    .as_mut_slice()
                    .iter_mut()
                    .zip(v.as_mut_slice())
                    .zip(g.as_slice())
                {
                    *v = momentum * *v + lr * g;
                    *p += sign * *v;
                }
            }
        }
        self.revision += 1;
        Ok(())
    }
}

fn init_scale(spec: &LayerSpec) -> f64 {
    (6.0 / (spec.in_dim + spec.out_dim) as f64).sqrt()
}

fn activate(activation: Activation, pre: &Matrix, out_dim: usize) -> (Matrix, Option<Vec<usize>>) {
    match activation {
        Activation::Linear => (pre.clone(), None),
        Activation::Relu => (pre.map(|v| v.max(0.0)), None),
        Activation::Sigmoid => (pre.map(sigmoid), None),
        Activation::Tanh => (pre.map(f64::tanh), None),
        Activation::Maxout { pieces } => {
            let mut out = Matrix::zeros(pre.rows(), out_dim);
            let mut argmax = Vec::with_capacity(pre.rows() * out_dim);
            for r in 0..pre.rows() {
                let row = pre.row(r);
                for u in 0..out_dim {
                    let group = &row[u * pieces..(u + 1) * pieces];
                    // strict > keeps the first maximal piece on ties
                    let mut best = 0;
                    for (j, &v) in group.iter().enumerate().skip(1) {
                        if v > group[best] {
                            best = j;
                        }
                    }
                    out[(r, u)] = group[best];
                    argmax.push(best);
                }
            }
            (out, Some(argmax))
        }
    }
}

fn activation_backward(
    spec: &LayerSpec,
    trace: &LayerTrace,
    delta: &Matrix,
) -> Result<Matrix, NeuralError> {
    let d = match spec.activation {
        Activation::Linear => delta.clone(),
        Activation::Relu => delta.zip_map(&trace.pre_activation, |g, z| if z > 0.0 { g } else { 0.0 })?,
        Activation::Sigmoid => delta.zip_map(&trace.output, |g, y| g * y * (1.0 - y))?,
        Activation::Tanh => delta.zip_map(&trace.output, |g, y| g * (1.0 - y * y))?,
        Activation::Maxout { pieces } => {
            let argmax = trace.argmax.as_ref().ok_or_else(|| {
                NeuralError::MismatchedActivations("maxout trace without argmax".into())
            })?;
            let mut d = Matrix::zeros(delta.rows(), spec.width());
            for r in 0..delta.rows() {
                for u in 0..spec.out_dim {
                    let piece = argmax[r * spec.out_dim + u];
                    d[(r, u * pieces + piece)] = delta[(r, u)];
                }
            }
            d
        }
    };
    Ok(d)
}
