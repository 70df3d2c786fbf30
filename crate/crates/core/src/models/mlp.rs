//! Fully connected ReLU network with a softmax output, trained by Adam on
//! mini-batches.
//!
//! Parameters live in one flat vector, layer by layer: the row-major weight
//! matrix (`out × in`) followed by the bias. The loss is the mean
//! cross-entropy of a batch plus `½·λ·‖W‖²` over all weights (no biases).

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::softmax_in_place;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub l2: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: vec![15, 15, 15],
            epochs: 300,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            l2: 1e-4,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::InvalidInput(
                "hidden layers need at least one unit".into(),
            ));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidInput(
                "epochs and batch_size must be >= 1".into(),
            ));
        }
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.l2 >= 0.0;
        if !ok {
            return Err(Error::InvalidInput("Adam/L2 settings out of range".into()));
        }
        Ok(())
    }
}

/// Layer widths and parameter offsets of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// `[n_in, h_1, ..., h_L, n_out]`.
    pub sizes: Vec<usize>,
}

impl Architecture {
    pub fn new(n_in: usize, hidden: &[usize], n_out: usize) -> Self {
        let mut sizes = vec![n_in];
        sizes.extend_from_slice(hidden);
        sizes.push(n_out);
        Self { sizes }
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// `(weight offset, bias offset, fan_in, fan_out)` of layer `l`.
    pub fn layer(&self, l: usize) -> (usize, usize, usize, usize) {
        let mut off = 0;
        for k in 0..l {
            off += self.sizes[k + 1] * (self.sizes[k] + 1);
        }
        let (fi, fo) = (self.sizes[l], self.sizes[l + 1]);
        (off, off + fi * fo, fi, fo)
    }

    pub fn n_params(&self) -> usize {
        (0..self.n_layers())
            .map(|l| self.sizes[l + 1] * (self.sizes[l] + 1))
            .sum()
    }

    fn is_weight(&self, index: usize) -> bool {
        (0..self.n_layers()).any(|l| {
            let (w, b, _, _) = self.layer(l);
            (w..b).contains(&index)
        })
    }
}

/// Per-layer activations of one sample; the last entry holds the softmax
/// probabilities.
fn forward(arch: &Architecture, theta: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
    let mut acts = Vec::with_capacity(arch.sizes.len());
    acts.push(x.to_vec());
    for l in 0..arch.n_layers() {
        let (w, b, fi, fo) = arch.layer(l);
        let input = &acts[l];
        let mut out = vec![0.0; fo];
        for (o, z) in out.iter_mut().enumerate() {
            let row = &theta[w + o * fi..w + (o + 1) * fi];
            *z = theta[b + o] + row.iter().zip(input).map(|(a, v)| a * v).sum::<f64>();
        }
        if l + 1 < arch.n_layers() {
            out.iter_mut().for_each(|z| *z = z.max(0.0));
        } else {
            softmax_in_place(&mut out);
        }
        acts.push(out);
    }
    acts
}

/// Class probabilities for one sample.
pub fn predict_proba(arch: &Architecture, theta: &[f64], x: &[f64]) -> Vec<f64> {
    forward(arch, theta, x).pop().expect("at least one layer")
}

fn penalty(arch: &Architecture, theta: &[f64]) -> f64 {
    (0..arch.n_layers())
        .map(|l| {
            let (w, b, _, _) = arch.layer(l);
            theta[w..b].iter().map(|v| v * v).sum::<f64>()
        })
        .sum()
}

/// Loss over the rows `batch` of `x`, writing its gradient into `grad`.
pub fn loss_and_grad(
    arch: &Architecture,
    theta: &[f64],
    x: &Array2<f64>,
    y: &[usize],
    batch: &[usize],
    l2: f64,
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut ce = 0.0;
    for &i in batch {
        let row = x.row(i);
        let xi = row.as_slice().expect("standard layout");
        let acts = forward(arch, theta, xi);
        let probs = &acts[arch.n_layers()];
        ce -= probs[y[i]].max(f64::MIN_POSITIVE).ln();
        // output delta of softmax + cross-entropy
        let mut delta: Vec<f64> = probs.clone();
        delta[y[i]] -= 1.0;
        for l in (0..arch.n_layers()).rev() {
            let (w, b, fi, fo) = arch.layer(l);
            let input = &acts[l];
            for o in 0..fo {
                grad[b + o] += delta[o];
                let g = &mut grad[w + o * fi..w + (o + 1) * fi];
                for (gv, v) in g.iter_mut().zip(input) {
                    *gv += delta[o] * v;
                }
            }
            if l > 0 {
                let mut prev = vec![0.0; fi];
                for o in 0..fo {
                    let row = &theta[w + o * fi..w + (o + 1) * fi];
                    for (p, wv) in prev.iter_mut().zip(row) {
                        *p += delta[o] * wv;
                    }
                }
                // ReLU derivative, taken as 0 at the kink
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }
    let inv = 1.0 / batch.len() as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    for l in 0..arch.n_layers() {
        let (w, b, _, _) = arch.layer(l);
        for k in w..b {
            grad[k] += l2 * theta[k];
        }
    }
    ce * inv + 0.5 * l2 * penalty(arch, theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub arch: Architecture,
    pub theta: Vec<f64>,
    /// Full training-set loss after each epoch.
    pub loss_history: Vec<f64>,
}

/// Xavier-uniform weights, zero biases.
pub fn init_params(arch: &Architecture, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, &[rng::tag::INIT]);
    let mut theta = vec![0.0; arch.n_params()];
    for l in 0..arch.n_layers() {
        let (w, b, fi, fo) = arch.layer(l);
        let limit = (6.0 / (fi + fo) as f64).sqrt();
        for v in &mut theta[w..b] {
            *v = r.random_range(-limit..limit);
        }
    }
    theta
}

impl MlpModel {
    pub fn fit(
        params: &MlpParams,
        x: &Array2<f64>,
        y: &[usize],
        n_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        let x = x.as_standard_layout().to_owned();
        let m = x.nrows();
        let arch = Architecture::new(x.ncols(), &params.hidden, n_classes);
        let mut theta = init_params(&arch, seed);
        let p = theta.len();
        let (mut m1, mut m2) = (vec![0.0; p], vec![0.0; p]);
        let mut grad = vec![0.0; p];
        let mut order: Vec<usize> = (0..m).collect();
        let all: Vec<usize> = (0..m).collect();
        let mut step = 0i32;
        let mut history = Vec::with_capacity(params.epochs);
        for epoch in 0..params.epochs {
            let mut r = rng::stream(seed, &[rng::tag::SHUFFLE, epoch as u64]);
            order.shuffle(&mut r);
            for batch in order.chunks(params.batch_size) {
                loss_and_grad(&arch, &theta, &x, y, batch, params.l2, &mut grad);
                step += 1;
                let bc1 = 1.0 - params.beta1.powi(step);
                let bc2 = 1.0 - params.beta2.powi(step);
                for k in 0..p {
                    m1[k] = params.beta1 * m1[k] + (1.0 - params.beta1) * grad[k];
                    m2[k] = params.beta2 * m2[k] + (1.0 - params.beta2) * grad[k] * grad[k];
                    let mh = m1[k] / bc1;
                    let vh = m2[k] / bc2;
                    theta[k] -= params.learning_rate * mh / (vh.sqrt() + params.epsilon);
                }
            }
            let loss = loss_and_grad(&arch, &theta, &x, y, &all, params.l2, &mut grad);
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "MLP loss diverged at epoch {epoch}"
                )));
            }
            history.push(loss);
        }
        Ok(Self {
            arch,
            theta,
            loss_history: history,
        })
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        predict_proba(&self.arch, &self.theta, x)
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        super::argmax(&self.predict_proba(x))
    }

    /// Whether parameter `index` is a weight (as opposed to a bias).
    pub fn is_weight(&self, index: usize) -> bool {
        self.arch.is_weight(index)
    }
}
