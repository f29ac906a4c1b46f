//! Forward pass, loss and analytic backpropagation through time.
//!
//! Per layer and time step, with gate pre-activations `z = W x + U h_prev + b`:
//!
//! ```text
//! i = sigmoid(z_i)   f = sigmoid(z_f)   g = tanh(z_g)   o = sigmoid(z_o)
//! c = f * c_prev + i * g
//! h = o * tanh(c)
//! ```
//!
//! The class distribution is `softmax(W_out (mask * h2_T) + b_out)` where
//! `h2_T` is the last layer-2 hidden state and `mask` is an inverted-dropout
//! mask (all ones at inference).

use rand::Rng;

use super::params::{LstmLayerParams, LstmParams};
use super::{LstmError, LstmModel};
use crate::features::FeatureSequence;
use crate::keypoints::ActionLabel;

pub const CLASSES: usize = ActionLabel::COUNT;
/// Lower clamp applied to the true-class probability before the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone)]
struct LayerTrace {
    /// `T x 4H` post-activation gate values in gate order.
    gates: Vec<f64>,
    cells: Vec<f64>,
    tanh_cells: Vec<f64>,
    hidden: Vec<f64>,
}

/// Activations recorded by a forward pass; consumed by [`LstmModel::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    mode: Mode,
    version: u64,
    steps: usize,
    input: Vec<f64>,
    layer1: LayerTrace,
    layer2: LayerTrace,
    /// Scaled keep mask applied to the last hidden state.
    mask: Vec<f64>,
    probs: [f64; CLASSES],
}

impl ForwardCache {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dropout_mask(&self) -> &[f64] {
        &self.mask
    }
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub probs: [f64; CLASSES],
    pub cache: ForwardCache,
}

/// Inverted-dropout keep mask: each entry is `1 / (1 - rate)` with probability
/// `1 - rate`, else 0.
pub fn dropout_mask<R: Rng + ?Sized>(rate: f64, len: usize, rng: &mut R) -> Vec<f64> {
    if rate == 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

/// Scaled categorical cross-entropy for a one-hot target over the eight
/// classes: `-(1/8) * ln(max(p_label, 1e-12))`.
pub fn loss(probs: &[f64], label: ActionLabel) -> f64 {
    -probs[label.index()].max(PROB_FLOOR).ln() / CLASSES as f64
}

pub fn softmax(logits: &[f64; CLASSES]) -> [f64; CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; CLASSES];
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        sum += *o;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}

/// Index of the largest probability; ties go to the lower index.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let (x, y) = (&a[4 * c..4 * c + 4], &b[4 * c..4 * c + 4]);
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn layer_forward(p: &LstmLayerParams, input: &[f64], steps: usize) -> LayerTrace {
    let (d, h) = (p.input_dim, p.hidden);
    let mut trace = LayerTrace {
        gates: vec![0.0; steps * 4 * h],
        cells: vec![0.0; steps * h],
        tanh_cells: vec![0.0; steps * h],
        hidden: vec![0.0; steps * h],
    };
    let mut z = vec![0.0; 4 * h];
    for t in 0..steps {
        let x = &input[t * d..(t + 1) * d];
        for (r, zr) in z.iter_mut().enumerate() {
            *zr = p.b[r] + dot(&p.w[r * d..(r + 1) * d], x);
        }
        if t > 0 {
            let h_prev = &trace.hidden[(t - 1) * h..t * h];
            for (r, zr) in z.iter_mut().enumerate() {
                *zr += dot(&p.u[r * h..(r + 1) * h], h_prev);
            }
        }
        let gates = &mut trace.gates[t * 4 * h..(t + 1) * 4 * h];
        for k in 0..h {
            gates[k] = sigmoid(z[k]);
            gates[h + k] = sigmoid(z[h + k]);
            gates[2 * h + k] = z[2 * h + k].tanh();
            gates[3 * h + k] = sigmoid(z[3 * h + k]);
        }
        for k in 0..h {
            let c_prev = if t > 0 {
                trace.cells[(t - 1) * h + k]
            } else {
                0.0
            };
            let c = gates[h + k] * c_prev + gates[k] * gates[2 * h + k];
            let tc = c.tanh();
            trace.cells[t * h + k] = c;
            trace.tanh_cells[t * h + k] = tc;
            trace.hidden[t * h + k] = gates[3 * h + k] * tc;
        }
    }
    trace
}

/// Backpropagates `dh_top` (`T x H`, gradient reaching each hidden state from
/// above) through one layer, accumulating into `grads`. Returns the gradient
/// with respect to the layer input when requested.
fn layer_backward(
    p: &LstmLayerParams,
    trace: &LayerTrace,
    input: &[f64],
    steps: usize,
    dh_top: &[f64],
    grads: &mut LstmLayerParams,
    want_input_grad: bool,
) -> Option<Vec<f64>> {
    let (d, h) = (p.input_dim, p.hidden);
    let mut dx = want_input_grad.then(|| vec![0.0; steps * d]);
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];

    for t in (0..steps).rev() {
        let gates = &trace.gates[t * 4 * h..(t + 1) * 4 * h];
        for k in 0..h {
            let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
            let tc = trace.tanh_cells[t * h + k];
            let c_prev = if t > 0 {
                trace.cells[(t - 1) * h + k]
            } else {
                0.0
            };
            let dh = dh_top[t * h + k] + dh_next[k];
            let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
            dz[k] = dc * g * i * (1.0 - i);
            dz[h + k] = dc * c_prev * f * (1.0 - f);
            dz[2 * h + k] = dc * i * (1.0 - g * g);
            dz[3 * h + k] = dh * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }

        let x = &input[t * d..(t + 1) * d];
        for (r, &dzr) in dz.iter().enumerate() {
            grads.b[r] += dzr;
            axpy(&mut grads.w[r * d..(r + 1) * d], dzr, x);
        }
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        if t > 0 {
            let h_prev = &trace.hidden[(t - 1) * h..t * h];
            for (r, &dzr) in dz.iter().enumerate() {
                axpy(&mut grads.u[r * h..(r + 1) * h], dzr, h_prev);
                axpy(&mut dh_next, dzr, &p.u[r * h..(r + 1) * h]);
            }
        }
        if let Some(dx) = dx.as_mut() {
            let dxt = &mut dx[t * d..(t + 1) * d];
            for (r, &dzr) in dz.iter().enumerate() {
                axpy(dxt, dzr, &p.w[r * d..(r + 1) * d]);
            }
        }
    }
    dx
}

impl LstmModel {
    fn check_input(&self, x: &FeatureSequence) -> Result<(), LstmError> {
        if x.cols() != self.input_dim() || x.rows() == 0 {
            return Err(LstmError::Shape {
                expected: format!("T x {} with T >= 1", self.input_dim()),
                found: format!("{} x {}", x.rows(), x.cols()),
            });
        }
        if let Some(pos) = x.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(LstmError::Numeric(format!(
                "non-finite input at row {}, column {}",
                pos / x.cols(),
                pos % x.cols()
            )));
        }
        Ok(())
    }

    fn run(&self, x: &FeatureSequence, mode: Mode, mask: Vec<f64>) -> ForwardPass {
        let params: &LstmParams = self.params();
        let steps = x.rows();
        let h = self.hidden();
        let layer1 = layer_forward(&params.layer1, x.as_slice(), steps);
        let layer2 = layer_forward(&params.layer2, &layer1.hidden, steps);
        let last = &layer2.hidden[(steps - 1) * h..steps * h];
        let dropped: Vec<f64> = last.iter().zip(&mask).map(|(v, m)| v * m).collect();

        let out = &params.output;
        let mut logits = [0.0; CLASSES];
        for (c, l) in logits.iter_mut().enumerate() {
            *l = out.b[c] + dot(&out.w[c * h..(c + 1) * h], &dropped);
        }
        let probs = softmax(&logits);
        ForwardPass {
            probs,
            cache: ForwardCache {
                mode,
                version: self.version(),
                steps,
                input: x.as_slice().to_vec(),
                layer1,
                layer2,
                mask,
                probs,
            },
        }
    }

    /// Runs the network. Train mode draws a fresh dropout mask from `rng`;
    /// infer mode applies neither mask nor scaling.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        x: &FeatureSequence,
        mode: Mode,
        rng: &mut R,
    ) -> Result<ForwardPass, LstmError> {
        self.check_input(x)?;
        let mask = match mode {
            Mode::Train => dropout_mask(self.dropout_rate(), self.hidden(), rng),
            Mode::Infer => vec![1.0; self.hidden()],
        };
        Ok(self.run(x, mode, mask))
    }

    /// Train-mode pass with a caller-supplied (already scaled) dropout mask.
    pub fn forward_with_mask(
        &self,
        x: &FeatureSequence,
        mask: &[f64],
    ) -> Result<ForwardPass, LstmError> {
        self.check_input(x)?;
        if mask.len() != self.hidden() {
            return Err(LstmError::Shape {
                expected: format!("dropout mask of length {}", self.hidden()),
                found: mask.len().to_string(),
            });
        }
        Ok(self.run(x, Mode::Train, mask.to_vec()))
    }

    pub fn infer(&self, x: &FeatureSequence) -> Result<[f64; CLASSES], LstmError> {
        self.check_input(x)?;
        Ok(self.run(x, Mode::Infer, vec![1.0; self.hidden()]).probs)
    }

    /// Gradient of the scaled cross-entropy with respect to every parameter,
    /// reusing the dropout mask recorded in `cache`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        label: ActionLabel,
    ) -> Result<LstmParams, LstmError> {
        if cache.mode != Mode::Train {
            return Err(LstmError::Usage(
                "backward needs a cache from a train-mode forward pass".into(),
            ));
        }
        if cache.version != self.version() {
            return Err(LstmError::Usage(
                "forward cache is stale: parameters changed since it was recorded".into(),
            ));
        }
        let params = self.params();
        let (steps, h) = (cache.steps, self.hidden());
        let mut grads = params.zeros_like();

        let mut dlogits = cache.probs;
        dlogits[label.index()] -= 1.0;
        for v in &mut dlogits {
            *v /= CLASSES as f64;
        }

        let last = &cache.layer2.hidden[(steps - 1) * h..steps * h];
        let dropped: Vec<f64> = last.iter().zip(&cache.mask).map(|(v, m)| v * m).collect();
        let mut dh_last = vec![0.0; h];
        for (c, &dl) in dlogits.iter().enumerate() {
            grads.output.b[c] = dl;
            axpy(&mut grads.output.w[c * h..(c + 1) * h], dl, &dropped);
            axpy(&mut dh_last, dl, &params.output.w[c * h..(c + 1) * h]);
        }
        let mut dh_top2 = vec![0.0; steps * h];
        for (k, v) in dh_top2[(steps - 1) * h..].iter_mut().enumerate() {
            *v = dh_last[k] * cache.mask[k];
        }

        let dh_top1 = layer_backward(
            &params.layer2,
            &cache.layer2,
            &cache.layer1.hidden,
            steps,
            &dh_top2,
            &mut grads.layer2,
            true,
        )
        .expect("input gradient requested");
        layer_backward(
            &params.layer1,
            &cache.layer1,
            &cache.input,
            steps,
            &dh_top1,
            &mut grads.layer1,
            false,
        );
        Ok(grads)
    }

    /// Most probable class under inference mode and its probability.
    pub fn predict(&self, x: &FeatureSequence) -> Result<(ActionLabel, f64), LstmError> {
        let probs = self.infer(x)?;
        let best = argmax(&probs);
        Ok((ActionLabel::ALL[best], probs[best]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::Architecture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> Architecture {
        Architecture {
            input_dim: 6,
            hidden: 4,
            dropout_rate: 0.5,
        }
    }

    fn random_input(rows: usize, cols: usize, seed: u64) -> FeatureSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FeatureSequence::from_rows(rows, cols, data, None)
    }

    #[test]
    fn zero_model_is_uniform() {
        let model = LstmModel::zeros(&Architecture::default());
        let x = random_input(30, 264, 1);
        let probs = model.infer(&x).unwrap();
        assert!(probs.iter().all(|&p| (p - 0.125).abs() < 1e-15));
        assert_eq!(model.predict(&x).unwrap(), (ActionLabel::Chopping, 0.125));
    }

    #[test]
    fn infer_is_deterministic_and_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let model = LstmModel::init(&tiny(), &mut rng).unwrap();
        let x = random_input(5, 6, 2);
        let a = model.forward(&x, Mode::Infer, &mut rng).unwrap().probs;
        let b = model.forward(&x, Mode::Infer, &mut rng).unwrap().probs;
        assert_eq!(a, b);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(a.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn loss_values() {
        let uniform = [0.125; 8];
        let expected = -(0.125f64).ln() / 8.0;
        assert!((loss(&uniform, ActionLabel::Pouring) - expected).abs() < 1e-15);
        assert!((expected - 0.2599).abs() < 1e-4);
        let mut sure = [0.0; 8];
        sure[2] = 1.0;
        assert_eq!(loss(&sure, ActionLabel::Grating), 0.0);
        let mut tiny = [0.0; 8];
        tiny[0] = 1e-12;
        let clamped = loss(&tiny, ActionLabel::Chopping);
        assert!((clamped - 3.454).abs() < 1e-3);
        // Below the floor the clamp holds the value.
        assert_eq!(loss(&[0.0; 8], ActionLabel::Chopping), clamped);
    }

    #[test]
    fn zero_weights_output_bias_gradient() {
        let model = LstmModel::zeros(&tiny());
        let x = FeatureSequence::zeros(3, 6);
        let pass = model.forward_with_mask(&x, &[1.0; 4]).unwrap();
        let grads = model.backward(&pass.cache, ActionLabel::Kneading).unwrap();
        for c in 0..8 {
            let onehot = if c == 3 { 1.0 } else { 0.0 };
            let expected = (0.125 - onehot) / 8.0;
            assert!((grads.output.b[c] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn backward_usage_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut model = LstmModel::init(&tiny(), &mut rng).unwrap();
        let x = random_input(3, 6, 4);
        let infer = model.forward(&x, Mode::Infer, &mut rng).unwrap();
        assert!(matches!(
            model.backward(&infer.cache, ActionLabel::Cutting),
            Err(LstmError::Usage(_))
        ));
        let train = model.forward(&x, Mode::Train, &mut rng).unwrap();
        model.params_mut().output.b[0] += 0.1;
        assert!(matches!(
            model.backward(&train.cache, ActionLabel::Cutting),
            Err(LstmError::Usage(_))
        ));
    }

    #[test]
    fn shape_and_numeric_errors() {
        let model = LstmModel::zeros(&tiny());
        assert!(matches!(
            model.predict(&random_input(3, 5, 1)),
            Err(LstmError::Shape { .. })
        ));
        let mut bad = random_input(3, 6, 1);
        bad.as_mut_slice()[7] = f64::INFINITY;
        assert!(matches!(model.infer(&bad), Err(LstmError::Numeric(_))));
    }

    #[test]
    fn train_mode_masks_and_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mask = dropout_mask(0.5, 10_000, &mut rng);
        assert!(mask.iter().all(|&m| m == 0.0 || m == 2.0));
        let kept = mask.iter().filter(|&&m| m > 0.0).count();
        assert!((4_800..5_200).contains(&kept));
        assert!(dropout_mask(0.0, 4, &mut rng).iter().all(|&m| m == 1.0));
    }

    #[test]
    fn predict_ignores_dropout_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut model = LstmModel::init(&tiny(), &mut rng).unwrap();
        let x = random_input(4, 6, 8);
        let a = model.predict(&x).unwrap();
        model.set_dropout_rate(0.9).unwrap();
        assert_eq!(model.predict(&x).unwrap(), a);
    }

    #[test]
    fn argmax_prefers_lower_index() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }
}
