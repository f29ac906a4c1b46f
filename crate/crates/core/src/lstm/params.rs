use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LstmError;
use crate::keypoints::ActionLabel;

/// Gate order used for the stacked weight blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Cell = 2,
    Output = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Cell, Gate::Output];
}

/// One recurrent layer. The four gates are stacked row-wise, so `w` is
/// `4H x D_in`, `u` is `4H x H` and `b` has `4H` entries, all row-major in
/// [`Gate`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayerParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: Vec<f64>,
}

impl LstmLayerParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            w: vec![0.0; 4 * hidden * input_dim],
            u: vec![0.0; 4 * hidden * hidden],
            b: vec![0.0; 4 * hidden],
        }
    }

    /// Uniform in `[-1/sqrt(H), 1/sqrt(H)]` with forget-gate bias 1.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut layer = Self::zeros(input_dim, hidden);
        for v in layer.w.iter_mut().chain(layer.u.iter_mut()) {
            *v = rng.gen_range(-bound..=bound);
        }
        for v in &mut layer.b {
            *v = rng.gen_range(-bound..=bound);
        }
        for v in layer.gate_bias_mut(Gate::Forget) {
            *v = 1.0;
        }
        layer
    }

    pub fn gate_input_weights(&self, gate: Gate) -> &[f64] {
        let n = self.hidden * self.input_dim;
        &self.w[gate as usize * n..(gate as usize + 1) * n]
    }

    pub fn gate_recurrent_weights(&self, gate: Gate) -> &[f64] {
        let n = self.hidden * self.hidden;
        &self.u[gate as usize * n..(gate as usize + 1) * n]
    }

    pub fn gate_bias(&self, gate: Gate) -> &[f64] {
        &self.b[gate as usize * self.hidden..(gate as usize + 1) * self.hidden]
    }

    fn gate_bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        let h = self.hidden;
        &mut self.b[gate as usize * h..(gate as usize + 1) * h]
    }

    fn check(&self, name: &str) -> Result<(), LstmError> {
        let (d, h) = (self.input_dim, self.hidden);
        if self.w.len() != 4 * h * d || self.u.len() != 4 * h * h || self.b.len() != 4 * h {
            return Err(LstmError::Format(format!(
                "{name}: tensor sizes do not match input_dim {d} and hidden {h}"
            )));
        }
        Ok(())
    }
}

/// Output projection from the last hidden state to class logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputParams {
    pub hidden: usize,
    /// `8 x H`, row-major.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl OutputParams {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            hidden,
            w: vec![0.0; ActionLabel::COUNT * hidden],
            b: vec![0.0; ActionLabel::COUNT],
        }
    }
}

/// The full trainable parameter set. Gradients use the same structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub layer1: LstmLayerParams,
    pub layer2: LstmLayerParams,
    pub output: OutputParams,
}

pub const TENSOR_NAMES: [&str; 8] = [
    "layer1.w", "layer1.u", "layer1.b", "layer2.w", "layer2.u", "layer2.b", "output.w", "output.b",
];

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            layer1: LstmLayerParams::zeros(input_dim, hidden),
            layer2: LstmLayerParams::zeros(hidden, hidden),
            output: OutputParams::zeros(hidden),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.layer1.input_dim, self.layer1.hidden)
    }

    pub fn tensors(&self) -> [&[f64]; 8] {
        [
            &self.layer1.w,
            &self.layer1.u,
            &self.layer1.b,
            &self.layer2.w,
            &self.layer2.u,
            &self.layer2.b,
            &self.output.w,
            &self.output.b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 8] {
        [
            &mut self.layer1.w,
            &mut self.layer1.u,
            &mut self.layer1.b,
            &mut self.layer2.w,
            &mut self.layer2.u,
            &mut self.layer2.b,
            &mut self.output.w,
            &mut self.output.b,
        ]
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn add_assign(&mut self, other: &LstmParams) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            for v in t.iter_mut() {
                *v *= factor;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

static NEXT_VERSION: AtomicU64 = AtomicU64::new(1);

fn next_version() -> u64 {
    NEXT_VERSION.fetch_add(1, Ordering::Relaxed)
}

/// Architecture of a two-layer classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: usize,
    pub dropout_rate: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            input_dim: 264,
            hidden: 128,
            dropout_rate: 0.5,
        }
    }
}

/// Two stacked LSTM layers, dropout on the final hidden state and a linear
/// projection onto the eight action classes.
#[derive(Debug, Clone)]
pub struct LstmModel {
    params: LstmParams,
    dropout_rate: f64,
    /// Changes whenever parameters may have been mutated; forward caches carry
    /// it so stale caches are detectable.
    version: u64,
}

impl PartialEq for LstmModel {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.dropout_rate == other.dropout_rate
    }
}

impl LstmModel {
    pub fn new(params: LstmParams, dropout_rate: f64) -> Result<Self, LstmError> {
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(LstmError::InvalidArgument(format!(
                "dropout rate {dropout_rate} outside [0, 1)"
            )));
        }
        params.layer1.check("layer1")?;
        params.layer2.check("layer2")?;
        let (h, input_dim) = (params.layer1.hidden, params.layer1.input_dim);
        if params.layer2.input_dim != h || params.layer2.hidden != h {
            return Err(LstmError::Format(format!(
                "layer2 must be {h} -> {h}, found {} -> {}",
                params.layer2.input_dim, params.layer2.hidden
            )));
        }
        let out = &params.output;
        if out.hidden != h
            || out.w.len() != ActionLabel::COUNT * h
            || out.b.len() != ActionLabel::COUNT
        {
            return Err(LstmError::Format(format!(
                "output projection must be {} x {h}",
                ActionLabel::COUNT
            )));
        }
        if !params.all_finite() {
            return Err(LstmError::Numeric(format!(
                "non-finite parameter in {input_dim} -> {h} model"
            )));
        }
        Ok(Self {
            params,
            dropout_rate,
            version: next_version(),
        })
    }

    pub fn init<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Result<Self, LstmError> {
        let h = arch.hidden;
        let layer1 = LstmLayerParams::init(arch.input_dim, h, rng);
        let layer2 = LstmLayerParams::init(h, h, rng);
        let bound = 1.0 / (h as f64).sqrt();
        let mut output = OutputParams::zeros(h);
        for v in output.w.iter_mut().chain(output.b.iter_mut()) {
            *v = rng.gen_range(-bound..=bound);
        }
        Self::new(
            LstmParams {
                layer1,
                layer2,
                output,
            },
            arch.dropout_rate,
        )
    }

    /// All parameters zero.
    pub fn zeros(arch: &Architecture) -> Self {
        Self::new(
            LstmParams::zeros(arch.input_dim, arch.hidden),
            arch.dropout_rate,
        )
        .expect("zero model is always valid")
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input_dim: self.input_dim(),
            hidden: self.hidden(),
            dropout_rate: self.dropout_rate,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.params.layer1.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.params.layer1.hidden
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn set_dropout_rate(&mut self, rate: f64) -> Result<(), LstmError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(LstmError::InvalidArgument(format!(
                "dropout rate {rate} outside [0, 1)"
            )));
        }
        self.dropout_rate = rate;
        Ok(())
    }

    pub fn params(&self) -> &LstmParams {
        &self.params
    }

    /// Mutable parameter access; invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut LstmParams {
        self.version = next_version();
        &mut self.params
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn into_params(self) -> LstmParams {
        self.params
    }
}
