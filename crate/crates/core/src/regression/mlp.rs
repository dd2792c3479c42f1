//! Single-hidden-layer tanh network with a linear output layer.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::math;
use crate::rng::Stream;
use crate::{Error, Result};

/// Armijo sufficient-decrease constant for the line search.
const ARMIJO: f64 = 1e-4;
/// Steps below this are treated as convergence.
const MIN_STEP: f64 = 1e-14;
const MAX_STEP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    /// Hidden units; 0 selects `max(4, ⌈q/2⌉)` for `q` inputs.
    pub hidden: usize,
    pub epochs: usize,
    /// Initial step length; later steps use Barzilai–Borwein proposals,
    /// always subject to backtracking.
    pub learning_rate: f64,
    /// Penalty on the squared weights of both layers (biases excluded).
    pub l2: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    /// Automatic hidden width, otherwise as [`MlpConfig::for_inputs`].
    fn default() -> Self {
        Self {
            hidden: 0,
            ..Self::for_inputs(0)
        }
    }
}

impl MlpConfig {
    /// Defaults for `q` inputs: `max(4, ⌈q/2⌉)` hidden units, 2000 epochs,
    /// `λ = 1e-4`.
    pub fn for_inputs(q: usize) -> Self {
        Self {
            hidden: 4.max(q.div_ceil(2)),
            epochs: 2000,
            learning_rate: 0.1,
            l2: 1e-4,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning rate must be positive"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::config("L2 penalty must be non-negative"));
        }
        Ok(())
    }

    /// Hidden units actually used for `q` inputs.
    pub fn hidden_for(&self, q: usize) -> usize {
        if self.hidden == 0 {
            4.max(q.div_ceil(2))
        } else {
            self.hidden
        }
    }

    /// Whether `rows` is below the recommended `10·H`.
    pub fn undersized(&self, rows: usize) -> bool {
        rows < 10 * self.hidden
    }
}

/// Network parameters, flattened as `W1 (H×q) | b1 (H) | W2 (p×H) | b2 (p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    inputs: usize,
    hidden: usize,
    outputs: usize,
    params: Vec<f64>,
}

impl Mlp {
    pub fn param_count(inputs: usize, hidden: usize, outputs: usize) -> usize {
        hidden * inputs + hidden + outputs * hidden + outputs
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(inputs: usize, hidden: usize, outputs: usize, seed: u64) -> Self {
        let mut rng = Stream::new(seed, 0);
        let mut params = vec![0.0; Self::param_count(inputs, hidden, outputs)];
        let a1 = math::sqrt(6.0 / (inputs + hidden) as f64);
        for w in &mut params[..hidden * inputs] {
            *w = a1 * (2.0 * rng.uniform() - 1.0);
        }
        let a2 = math::sqrt(6.0 / (hidden + outputs) as f64);
        let w2 = hidden * inputs + hidden;
        for w in &mut params[w2..w2 + outputs * hidden] {
            *w = a2 * (2.0 * rng.uniform() - 1.0);
        }
        Self {
            inputs,
            hidden,
            outputs,
            params,
        }
    }

    pub fn from_params(inputs: usize, hidden: usize, outputs: usize, params: Vec<f64>) -> Result<Self> {
        let expected = Self::param_count(inputs, hidden, outputs);
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "network parameters",
                expected,
                found: params.len(),
            });
        }
        Ok(Self {
            inputs,
            hidden,
            outputs,
            params,
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.outputs * self.hidden;
        (b1, w2, b2)
    }

    fn forward_hidden(&self, x: &[f64], h: &mut [f64]) {
        let (b1, _, _) = self.offsets();
        for (u, hu) in h.iter_mut().enumerate() {
            let row = &self.params[u * self.inputs..(u + 1) * self.inputs];
            let a = self.params[b1 + u] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *hu = math::tanh(a);
        }
    }

    fn forward_output(&self, h: &[f64], out: &mut [f64]) {
        let (_, w2, b2) = self.offsets();
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.params[w2 + k * self.hidden..w2 + (k + 1) * self.hidden];
            *o = self.params[b2 + k] + row.iter().zip(h).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    pub fn forward(&self, x: &[f64], out: &mut [f64]) {
        let mut h = vec![0.0; self.hidden];
        self.forward_hidden(x, &mut h);
        self.forward_output(&h, out);
    }

    fn penalty(&self, l2: f64) -> f64 {
        let (b1, w2, b2) = self.offsets();
        let sq = |s: &[f64]| s.iter().map(|w| w * w).sum::<f64>();
        l2 * (sq(&self.params[..b1]) + sq(&self.params[w2..b2]))
    }

    /// `Σ_i w_i ‖t_i − f(x_i)‖² + λ(‖W1‖² + ‖W2‖²)`.
    pub fn loss(&self, x: &Matrix, t: &Matrix, w: &[f64], l2: f64) -> f64 {
        let mut h = vec![0.0; self.hidden];
        let mut y = vec![0.0; self.outputs];
        let mut total = 0.0;
        for (i, wi) in w.iter().enumerate().take(x.rows()) {
            self.forward_hidden(x.row(i), &mut h);
            self.forward_output(&h, &mut y);
            let r: f64 = y.iter().zip(t.row(i)).map(|(a, b)| (a - b) * (a - b)).sum();
            total += wi * r;
        }
        total + self.penalty(l2)
    }

    /// Loss and its gradient with respect to the flattened parameters.
    pub fn loss_and_gradient(&self, x: &Matrix, t: &Matrix, w: &[f64], l2: f64) -> (f64, Vec<f64>) {
        let (b1, w2, b2) = self.offsets();
        let mut grad = vec![0.0; self.params.len()];
        let mut h = vec![0.0; self.hidden];
        let mut y = vec![0.0; self.outputs];
        let mut dy = vec![0.0; self.outputs];
        let mut total = 0.0;
        for i in 0..x.rows() {
            let xi = x.row(i);
            self.forward_hidden(xi, &mut h);
            self.forward_output(&h, &mut y);
            for k in 0..self.outputs {
                let r = y[k] - t[(i, k)];
                total += w[i] * r * r;
                dy[k] = 2.0 * w[i] * r;
            }
            for k in 0..self.outputs {
                grad[b2 + k] += dy[k];
                for u in 0..self.hidden {
                    grad[w2 + k * self.hidden + u] += dy[k] * h[u];
                }
            }
            for u in 0..self.hidden {
                let back: f64 = (0..self.outputs)
                    .map(|k| self.params[w2 + k * self.hidden + u] * dy[k])
                    .sum();
                let da = back * (1.0 - h[u] * h[u]);
                grad[b1 + u] += da;
                for (j, v) in xi.iter().enumerate() {
                    grad[u * self.inputs + j] += da * v;
                }
            }
        }
        for idx in (0..b1).chain(w2..b2) {
            grad[idx] += 2.0 * l2 * self.params[idx];
        }
        (total + self.penalty(l2), grad)
    }
}

/// Full-batch gradient descent with Armijo backtracking. Returns the network
/// and the loss after every accepted epoch (non-increasing).
pub(crate) fn train(x: &Matrix, t: &Matrix, w: &[f64], config: &MlpConfig) -> Result<(Mlp, Vec<f64>)> {
    let mut net = Mlp::init(x.cols(), config.hidden_for(x.cols()), t.cols(), config.seed);
    let (mut loss, mut grad) = net.loss_and_gradient(x, t, w, config.l2);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss(0));
    }
    let mut history = Vec::with_capacity(config.epochs + 1);
    history.push(loss);
    let mut step = config.learning_rate;
    let mut candidate = net.clone();
    for epoch in 1..=config.epochs {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2 == 0.0 {
            break;
        }
        let mut trial = step;
        let accepted = loop {
            for ((c, p), g) in candidate.params.iter_mut().zip(&net.params).zip(&grad) {
                *c = p - trial * g;
            }
            let (l, g) = candidate.loss_and_gradient(x, t, w, config.l2);
            if l.is_finite() && l <= loss - ARMIJO * trial * gnorm2 {
                break Some((l, g));
            }
            trial *= 0.5;
            if trial < MIN_STEP {
                break None;
            }
        };
        let Some((new_loss, new_grad)) = accepted else {
            break;
        };
        if !new_loss.is_finite() {
            return Err(Error::NonFiniteLoss(epoch));
        }
        // Barzilai–Borwein proposal for the next step.
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..grad.len() {
            let s = candidate.params[i] - net.params[i];
            ss += s * s;
            sy += s * (new_grad[i] - grad[i]);
        }
        step = if sy > 0.0 { ss / sy } else { 2.0 * trial };
        step = step.clamp(MIN_STEP, MAX_STEP);
        core::mem::swap(&mut net, &mut candidate);
        loss = new_loss;
        grad = new_grad;
        history.push(loss);
    }
    Ok((net, history))
}
