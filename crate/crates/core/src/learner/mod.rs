//! The shared Q-network, action selection, the single-step experience
//! buffer and the TD(0) update.
//!
//! One network serves the whole population. Parameters are stored as
//! f32 (matching the exact checkpoint format) while all arithmetic runs
//! in f64. Observations are sparse, so the input layer is evaluated
//! column-wise over the nonzero entries through a cached transpose.
//! Gradients are accumulated over fixed-size chunks reduced in index
//! order, so results do not depend on the worker count.

pub mod checkpoint;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::LearnerConfig;
use crate::error::LearnerError;
use crate::perception::StateVector;

/// Hidden width of the production network.
pub const HIDDEN_UNITS: u32 = 32;
/// Output width: one Q-value per action.
pub const OUTPUT_UNITS: u32 = 9;

/// Transitions per parallel gradient chunk. Fixed so that the floating
/// point reduction tree is a function of the batch alone.
const GRAD_CHUNK: usize = 256;

/// One agent's experience for a single step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: StateVector,
    pub action: u8,
    pub reward: f64,
    pub next_state: StateVector,
    /// True when the agent died this step; the bootstrap term is then
    /// dropped from the target.
    pub terminal: bool,
}

/// Fully connected network with logistic-sigmoid hidden layers and a
/// linear output layer. `dims` lists layer widths from input to output.
#[derive(Debug, Clone)]
pub struct QNetwork {
    dims: Vec<u32>,
    /// Row-major `[out][in]` weight matrix per layer.
    weights: Vec<Vec<f32>>,
    biases: Vec<Vec<f32>>,
    /// Column-major copy of `weights[0]`, rebuilt after every mutation.
    w0_by_input: Vec<f32>,
}

impl PartialEq for QNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.weights == other.weights && self.biases == other.biases
    }
}

impl QNetwork {
    /// Initialize with weights and biases uniform in
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn new(dims: &[u32], rng: &mut ChaCha8Rng) -> QNetwork {
        assert!(dims.len() >= 2, "need at least input and output layers");
        assert!(dims.iter().all(|&d| d >= 1), "zero-width layer");
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let fan_in = dims[l] as usize;
            let fan_out = dims[l + 1] as usize;
            let bound = 1.0 / (fan_in as f64).sqrt();
            let mut w = Vec::with_capacity(fan_out * fan_in);
            for _ in 0..fan_out * fan_in {
                w.push(rng.random_range(-bound..bound) as f32);
            }
            let mut b = Vec::with_capacity(fan_out);
            for _ in 0..fan_out {
                b.push(rng.random_range(-bound..bound) as f32);
            }
            weights.push(w);
            biases.push(b);
        }
        let mut net = QNetwork {
            dims: dims.to_vec(),
            weights,
            biases,
            w0_by_input: Vec::new(),
        };
        net.rebuild_input_transpose();
        net
    }

    pub(crate) fn from_parts(dims: Vec<u32>, weights: Vec<Vec<f32>>, biases: Vec<Vec<f32>>) -> QNetwork {
        let mut net = QNetwork {
            dims,
            weights,
            biases,
            w0_by_input: Vec::new(),
        };
        net.rebuild_input_transpose();
        net
    }

    /// The production shape: two hidden layers of 32 units and a
    /// 9-way linear head.
    pub fn shared(input_dim: u32, rng: &mut ChaCha8Rng) -> QNetwork {
        QNetwork::new(&[input_dim, HIDDEN_UNITS, HIDDEN_UNITS, OUTPUT_UNITS], rng)
    }

    fn rebuild_input_transpose(&mut self) {
        let fan_in = self.dims[0] as usize;
        let fan_out = self.dims[1] as usize;
        self.w0_by_input.clear();
        self.w0_by_input.resize(fan_in * fan_out, 0.0);
        for o in 0..fan_out {
            for i in 0..fan_in {
                self.w0_by_input[i * fan_out + o] = self.weights[0][o * fan_in + i];
            }
        }
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0] as usize
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap() as usize
    }

    pub fn layer_count(&self) -> usize {
        self.dims.len() - 1
    }

    /// Total parameter count (weights then biases, layer by layer).
    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Flat parameter accessors in checkpoint order: for each layer, the
    /// row-major weights then the biases.
    pub fn param(&self, mut i: usize) -> f32 {
        for l in 0..self.layer_count() {
            if i < self.weights[l].len() {
                return self.weights[l][i];
            }
            i -= self.weights[l].len();
            if i < self.biases[l].len() {
                return self.biases[l][i];
            }
            i -= self.biases[l].len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut i: usize, v: f32) {
        for l in 0..self.layer_count() {
            if i < self.weights[l].len() {
                self.weights[l][i] = v;
                if l == 0 {
                    self.rebuild_input_transpose();
                }
                return;
            }
            i -= self.weights[l].len();
            if i < self.biases[l].len() {
                self.biases[l][i] = v;
                return;
            }
            i -= self.biases[l].len();
        }
        panic!("parameter index out of range");
    }

    pub fn params_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Q-values for one state. Fails on a length mismatch.
    pub fn forward(&self, state: &[f32]) -> Result<Vec<f64>, LearnerError> {
        if state.len() != self.input_dim() {
            return Err(LearnerError::ShapeMismatch {
                expected: self.input_dim(),
                got: state.len(),
            });
        }
        let mut scratch = ForwardScratch::new(self);
        self.forward_cached(state, &mut scratch);
        Ok(scratch.output().to_vec())
    }

    /// Q-values for many states; by construction identical to calling
    /// `forward` one state at a time.
    pub fn forward_batch(&self, states: &[&[f32]]) -> Result<Vec<Vec<f64>>, LearnerError> {
        states.iter().map(|s| self.forward(s)).collect()
    }

    /// Forward pass into caller-provided scratch; the output layer is
    /// left in `scratch.output()`. Hot-path variant of `forward`.
    pub fn forward_with<'s>(&self, state: &[f32], scratch: &'s mut ForwardScratch) -> &'s [f64] {
        assert_eq!(state.len(), self.input_dim());
        self.forward_cached(state, scratch);
        scratch.output()
    }

    fn forward_cached(&self, state: &[f32], scratch: &mut ForwardScratch) {
        debug_assert_eq!(state.len(), self.input_dim());
        let layers = self.layer_count();

        // input layer, column-wise over nonzero entries
        {
            let fan_out = self.dims[1] as usize;
            let out = &mut scratch.activations[0];
            for (o, b) in out.iter_mut().zip(&self.biases[0]) {
                *o = *b as f64;
            }
            for (i, &xv) in state.iter().enumerate() {
                if xv != 0.0 {
                    let x = xv as f64;
                    let col = &self.w0_by_input[i * fan_out..(i + 1) * fan_out];
                    for (o, w) in out.iter_mut().zip(col) {
                        *o += *w as f64 * x;
                    }
                }
            }
            if layers > 1 {
                for o in out.iter_mut() {
                    *o = sigmoid(*o);
                }
            }
        }

        for l in 1..layers {
            let fan_in = self.dims[l] as usize;
            let fan_out = self.dims[l + 1] as usize;
            let (prev, rest) = scratch.activations.split_at_mut(l);
            let input = &prev[l - 1];
            let out = &mut rest[0];
            for o in 0..fan_out {
                let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                let z = dot_mixed(row, input) + self.biases[l][o] as f64;
                out[o] = if l + 1 == layers { z } else { sigmoid(z) };
            }
        }
    }

    /// One semi-gradient TD(0) step on `0.5 * mean((y - Q(s, a))^2)`,
    /// where `y = r + gamma * max_a' Q(s', a')` is computed with the
    /// same network, held constant, and loses the bootstrap term on
    /// terminal transitions. A no-op when learning is disabled.
    pub fn td_update(
        &mut self,
        batch: &[Transition],
        cfg: &LearnerConfig,
    ) -> Result<(), LearnerError> {
        if !cfg.learning_enabled || batch.is_empty() {
            return Ok(());
        }
        let total = self.loss_gradient(batch, cfg.discount_gamma)?;
        let mut i = 0;
        let lr = cfg.learning_rate;
        for l in 0..self.layer_count() {
            for w in &mut self.weights[l] {
                *w = (*w as f64 - lr * total[i]) as f32;
                i += 1;
            }
            for b in &mut self.biases[l] {
                *b = (*b as f64 - lr * total[i]) as f32;
                i += 1;
            }
        }
        self.rebuild_input_transpose();
        if !self.params_finite() {
            return Err(LearnerError::NonFinite("network parameters after update"));
        }
        Ok(())
    }

    /// Exact backpropagated gradient of the mean squared TD error over
    /// `batch`, in checkpoint parameter order, with targets held fixed.
    pub fn loss_gradient(
        &self,
        batch: &[Transition],
        gamma: f64,
    ) -> Result<Vec<f64>, LearnerError> {
        for t in batch {
            if t.state.len() != self.input_dim() || t.next_state.len() != self.input_dim() {
                return Err(LearnerError::ShapeMismatch {
                    expected: self.input_dim(),
                    got: t.state.len(),
                });
            }
            assert!((t.action as usize) < self.output_dim(), "action out of range");
        }
        let n_params = self.param_count();
        let grads: Vec<Vec<f64>> = batch
            .par_chunks(GRAD_CHUNK)
            .map(|chunk| {
                let mut grad = vec![0f64; n_params];
                let mut scratch = ForwardScratch::new(self);
                let mut deltas = DeltaScratch::new(self);
                for t in chunk {
                    self.accumulate_gradient(
                        t,
                        batch.len(),
                        gamma,
                        &mut grad,
                        &mut scratch,
                        &mut deltas,
                    );
                }
                grad
            })
            .collect();

        let mut total = vec![0f64; n_params];
        for g in &grads {
            for (acc, v) in total.iter_mut().zip(g) {
                *acc += v;
            }
        }
        Ok(total)
    }

    /// Add the gradient of `0.5 * (Q(s, a) - y)^2 / batch_n` into
    /// `grad`, laid out in checkpoint parameter order.
    fn accumulate_gradient(
        &self,
        t: &Transition,
        batch_n: usize,
        gamma: f64,
        grad: &mut [f64],
        scratch: &mut ForwardScratch,
        deltas: &mut DeltaScratch,
    ) {
        let y = if t.terminal {
            td_target(t.reward, gamma, &[], true)
        } else {
            self.forward_cached(t.next_state.values(), scratch);
            td_target(t.reward, gamma, scratch.output(), false)
        };
        self.forward_cached(t.state.values(), scratch);
        let layers = self.layer_count();
        let a = t.action as usize;
        let q_a = scratch.activations[layers - 1][a];
        let scale = (q_a - y) / batch_n as f64;

        let top = &mut deltas.layers[layers - 1];
        top.fill(0.0);
        top[a] = scale;

        for l in (0..layers).rev() {
            let fan_in = self.dims[l] as usize;
            let fan_out = self.dims[l + 1] as usize;
            let off = self.layer_param_offset(l);
            let (below, upper) = deltas.layers.split_at_mut(l);
            let delta = &upper[0];

            // weight and bias gradients for this layer
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let w_grad = &mut grad[off + o * fan_in..off + (o + 1) * fan_in];
                if l == 0 {
                    for (i, &xv) in t.state.values().iter().enumerate() {
                        if xv != 0.0 {
                            w_grad[i] += d * xv as f64;
                        }
                    }
                } else {
                    let h = &scratch.activations[l - 1];
                    for (g, hv) in w_grad.iter_mut().zip(h) {
                        *g += d * hv;
                    }
                }
                grad[off + fan_out * fan_in + o] += d;
            }
            if l == 0 {
                break;
            }

            // propagate through the sigmoid below
            let prev = &mut below[l - 1];
            prev.fill(0.0);
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &self.weights[l][o * fan_in..(o + 1) * fan_in];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += *w as f64 * d;
                }
            }
            let h = &scratch.activations[l - 1];
            for (p, hv) in prev.iter_mut().zip(h) {
                *p *= hv * (1.0 - hv);
            }
        }
    }

    fn layer_param_offset(&self, layer: usize) -> usize {
        let mut off = 0;
        for l in 0..layer {
            off += self.weights[l].len() + self.biases[l].len();
        }
        off
    }
}

/// Per-thread activation storage; `activations[l]` holds the output of
/// layer `l` (the input stays in the caller's slice).
pub struct ForwardScratch {
    activations: Vec<Vec<f64>>,
}

impl ForwardScratch {
    pub fn new(net: &QNetwork) -> ForwardScratch {
        ForwardScratch {
            activations: net.dims[1..]
                .iter()
                .map(|&d| vec![0f64; d as usize])
                .collect(),
        }
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }
}

struct DeltaScratch {
    layers: Vec<Vec<f64>>,
}

impl DeltaScratch {
    fn new(net: &QNetwork) -> DeltaScratch {
        DeltaScratch {
            layers: net.dims[1..]
                .iter()
                .map(|&d| vec![0f64; d as usize])
                .collect(),
        }
    }
}

/// TD(0) target `r + gamma * max_a' Q(s', a')`; the bootstrap term is
/// dropped for terminal transitions.
pub fn td_target(reward: f64, gamma: f64, next_q: &[f64], terminal: bool) -> f64 {
    if terminal {
        return reward;
    }
    reward + gamma * next_q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// f32-weight, f64-activation dot product with four independent
/// accumulators.
#[inline]
fn dot_mixed(w: &[f32], h: &[f64]) -> f64 {
    debug_assert_eq!(w.len(), h.len());
    let mut acc = [0f64; 4];
    let mut i = 0;
    while i + 4 <= w.len() {
        acc[0] += w[i] as f64 * h[i];
        acc[1] += w[i + 1] as f64 * h[i + 1];
        acc[2] += w[i + 2] as f64 * h[i + 2];
        acc[3] += w[i + 3] as f64 * h[i + 3];
        i += 4;
    }
    let mut tail = 0f64;
    while i < w.len() {
        tail += w[i] as f64 * h[i];
        i += 1;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Epsilon-greedy selection over Q-values: with probability `epsilon` a
/// uniform action, otherwise the argmax with ties to the lowest index.
/// No validity masking; invalid actions are no-ops at the environment.
pub fn select_action(
    qvalues: &[f64],
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<usize, LearnerError> {
    if qvalues.iter().any(|q| !q.is_finite()) {
        return Err(LearnerError::NonFinite("qvalues"));
    }
    if rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..qvalues.len()));
    }
    Ok(argmax(qvalues))
}

/// Index of the maximum, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Buffer holding every agent's transitions for the current step only;
/// drained into minibatches and cleared before the next step.
#[derive(Debug, Default)]
pub struct ExperienceBuffer {
    transitions: Vec<Transition>,
}

impl ExperienceBuffer {
    pub fn new() -> ExperienceBuffer {
        ExperienceBuffer::default()
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }

    /// Shuffle, emit `len / batch_size` disjoint batches, discard the
    /// remainder and leave the buffer empty.
    pub fn drain_minibatches(
        &mut self,
        batch_size: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Vec<Transition>> {
        assert!(batch_size >= 1);
        use rand::seq::SliceRandom;
        self.transitions.shuffle(rng);
        let n_batches = self.transitions.len() / batch_size;
        self.transitions.truncate(n_batches * batch_size);
        let mut batches = Vec::with_capacity(n_batches);
        for _ in 0..n_batches {
            let rest = self.transitions.split_off(self.transitions.len() - batch_size);
            batches.push(rest);
        }
        batches
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use rand_chacha::rand_core::SeedableRng;

    fn zeroed(dims: &[u32]) -> QNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = QNetwork::new(dims, &mut rng);
        for i in 0..net.param_count() {
            net.set_param(i, 0.0);
        }
        net
    }

    fn transition(state: &[f32], action: u8, reward: f64, next: &[f32], terminal: bool) -> Transition {
        Transition {
            state: StateVector(state.into()),
            action,
            reward,
            next_state: StateVector(next.into()),
            terminal,
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = zeroed(&[250, 32, 32, 9]);
        let q = net.forward(&[0.7; 250]).unwrap();
        assert_eq!(q, vec![0.0; 9]);
    }

    #[test]
    fn toy_network_matches_hand_computation() {
        // 1-2-9 with exactly representable parameters
        let mut net = zeroed(&[1, 2, 9]);
        // layer 0: w = [0.5, -1.5], b = [0.25, 0.5]
        net.set_param(0, 0.5);
        net.set_param(1, -1.5);
        net.set_param(2, 0.25);
        net.set_param(3, 0.5);
        // layer 1, row 0: w = [1.0, 2.0], b = 0.125
        net.set_param(4, 1.0);
        net.set_param(5, 2.0);
        net.set_param(4 + 18, 0.125);
        let q = net.forward(&[2.0]).unwrap();
        let h0 = 1.0 / (1.0 + (-(0.5f64 * 2.0 + 0.25)).exp());
        let h1 = 1.0 / (1.0 + (-(-1.5f64 * 2.0 + 0.5)).exp());
        let expect = h0 + 2.0 * h1 + 0.125;
        assert!((q[0] - expect).abs() < 1e-9, "{} vs {expect}", q[0]);
        assert!(q[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sigmoid_of_zero_propagates_half() {
        // all-zero input and first layer leave the hidden layer at 0.5;
        // an output row of ones then sums three halves
        let mut net = zeroed(&[4, 3, 9]);
        let w1_off = 4 * 3 + 3;
        for i in 0..3 {
            net.set_param(w1_off + i, 1.0);
        }
        let q = net.forward(&[0.0; 4]).unwrap();
        assert_eq!(q[0], 1.5);
    }

    #[test]
    fn batched_forward_equals_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = QNetwork::new(&[10, 4, 9], &mut rng);
        let a: Vec<f32> = (0..10).map(|i| i as f32 * 0.1).collect();
        let b: Vec<f32> = (0..10).map(|i| -(i as f32) * 0.05).collect();
        let batch = net.forward_batch(&[&a, &b]).unwrap();
        assert_eq!(batch[0], net.forward(&a).unwrap());
        assert_eq!(batch[1], net.forward(&b).unwrap());
    }

    #[test]
    fn forward_rejects_wrong_length() {
        let net = zeroed(&[10, 4, 9]);
        assert!(matches!(
            net.forward(&[0.0; 9]),
            Err(LearnerError::ShapeMismatch { expected: 10, got: 9 })
        ));
    }

    #[test]
    fn greedy_selection_takes_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut q = [0.0; 9];
        q[7] = 1.0;
        assert_eq!(select_action(&q, 0.0, &mut rng).unwrap(), 7);
    }

    #[test]
    fn greedy_tie_breaks_to_lowest_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = [0.5; 9];
        assert_eq!(select_action(&q, 0.0, &mut rng).unwrap(), 0);
    }

    #[test]
    fn nan_qvalues_are_a_numeric_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut q = [0.0; 9];
        q[3] = f64::NAN;
        assert!(select_action(&q, 0.0, &mut rng).is_err());
    }

    #[test]
    fn td_target_follows_update_rule_arithmetic() {
        // r = 1, max Q(s') = 2, gamma = 0.9 gives y = 2.8; a tabular
        // step from Q = 0 at alpha = 0.1 lands on 0.28
        let y = td_target(1.0, 0.9, &[0.5, 2.0, -1.0], false);
        assert!((y - 2.8).abs() < 1e-12);
        let q_after = 0.0 + 0.1 * (y - 0.0);
        assert!((q_after - 0.28).abs() < 1e-12);
        // terminal drops the bootstrap term
        assert_eq!(td_target(1.0, 0.9, &[5.0], true), 1.0);
    }

    #[test]
    fn gamma_zero_update_moves_q_toward_reward() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut net = QNetwork::new(&[3, 4, 9], &mut rng);
        let cfg = LearnerConfig {
            epsilon: 0.0,
            discount_gamma: 0.0,
            learning_rate: 0.05,
            batch_size: 1,
            learning_enabled: true,
        };
        let state = [0.3f32, -0.7, 1.1];
        let t = transition(&state, 4, 1.0, &state, false);
        let mut prev_gap = (net.forward(&state).unwrap()[4] - 1.0).abs();
        for _ in 0..200 {
            net.td_update(std::slice::from_ref(&t), &cfg).unwrap();
            let gap = (net.forward(&state).unwrap()[4] - 1.0).abs();
            assert!(gap <= prev_gap + 1e-12, "gap grew: {prev_gap} -> {gap}");
            prev_gap = gap;
        }
        assert!(prev_gap < 0.05, "Q did not approach reward: gap {prev_gap}");
    }

    #[test]
    fn disabled_learning_is_a_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = QNetwork::new(&[3, 4, 9], &mut rng);
        let before = net.encode();
        let cfg = LearnerConfig {
            learning_enabled: false,
            ..SimConfig::default().learner
        };
        let t = transition(&[1.0, 2.0, 3.0], 0, 1.0, &[0.0; 3], false);
        net.td_update(&[t], &cfg).unwrap();
        assert_eq!(net.encode(), before);
    }

    #[test]
    fn drain_emits_floor_count_and_clears() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut buffer = ExperienceBuffer::new();
        for i in 0..5000 {
            buffer.push(transition(&[i as f32], 0, i as f64, &[0.0], false));
        }
        let batches = buffer.drain_minibatches(1024, &mut rng);
        assert_eq!(batches.len(), 4);
        assert!(batches.iter().all(|b| b.len() == 1024));
        assert!(buffer.is_empty());
    }

    #[test]
    fn drain_of_empty_buffer_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut buffer = ExperienceBuffer::new();
        assert!(buffer.drain_minibatches(16, &mut rng).is_empty());
        assert!(buffer.is_empty());
    }

    #[test]
    fn drained_batches_never_repeat_a_transition() {
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut buffer = ExperienceBuffer::new();
            for i in 0..337 {
                buffer.push(transition(&[0.0], 0, i as f64, &[0.0], false));
            }
            let batches = buffer.drain_minibatches(64, &mut rng);
            assert_eq!(batches.len(), 5);
            let mut seen: Vec<u64> = batches
                .iter()
                .flatten()
                .map(|t| t.reward as u64)
                .collect();
            seen.sort_unstable();
            let before = seen.len();
            seen.dedup();
            assert_eq!(seen.len(), before, "duplicate transition in seed {seed}");
        }
    }

    #[test]
    fn update_keeps_parameters_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = QNetwork::new(&[6, 5, 9], &mut rng);
        let cfg = SimConfig::default().learner;
        let batch: Vec<Transition> = (0..64)
            .map(|i| {
                transition(
                    &[i as f32 * 0.1; 6],
                    (i % 9) as u8,
                    (i as f64).sin(),
                    &[i as f32 * 0.05; 6],
                    i % 7 == 0,
                )
            })
            .collect();
        net.td_update(&batch, &cfg).unwrap();
        assert!(net.params_finite());
    }
}
