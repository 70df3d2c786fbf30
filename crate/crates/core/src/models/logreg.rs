//! Multinomial logistic regression trained with L-BFGS.
//!
//! Objective: mean negative log-likelihood of the softmax model plus
//! `½·λ·‖W‖²` (the bias is not penalized).

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::lbfgs::{self, LbfgsOptions};
use super::softmax_in_place;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogregParams {
    pub l2: f64,
    pub max_iter: usize,
    pub memory: usize,
}

impl Default for LogregParams {
    fn default() -> Self {
        Self {
            l2: 1.0,
            max_iter: 100,
            memory: 10,
        }
    }
}

impl LogregParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::InvalidInput("l2 must be finite and >= 0".into()));
        }
        if self.max_iter == 0 || self.memory == 0 {
            return Err(Error::InvalidInput(
                "max_iter and memory must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogregModel {
    /// `n_classes × n_features`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    /// Objective value after each accepted L-BFGS step.
    pub loss_history: Vec<f64>,
}

/// Objective and gradient at packed parameters `[W row-major, b]`.
pub fn objective(
    theta: &[f64],
    grad: &mut [f64],
    x: ArrayView2<f64>,
    y: &[usize],
    k: usize,
    l2: f64,
) -> f64 {
    let (m, n) = x.dim();
    let (w, b) = theta.split_at(k * n);
    grad.iter_mut().for_each(|g| *g = 0.0);
    let (gw, gb) = grad.split_at_mut(k * n);
    let mut nll = 0.0;
    let mut z = vec![0.0; k];
    for i in 0..m {
        let row = x.row(i);
        for c in 0..k {
            let wc = &w[c * n..(c + 1) * n];
            z[c] = b[c] + wc.iter().zip(row.iter()).map(|(a, v)| a * v).sum::<f64>();
        }
        let zy = z[y[i]];
        nll += softmax_in_place(&mut z) - zy;
        for c in 0..k {
            let r = z[c] - f64::from(u8::from(c == y[i]));
            gb[c] += r;
            for (g, v) in gw[c * n..(c + 1) * n].iter_mut().zip(row.iter()) {
                *g += r * v;
            }
        }
    }
    let inv_m = 1.0 / m as f64;
    gw.iter_mut().for_each(|g| *g *= inv_m);
    gb.iter_mut().for_each(|g| *g *= inv_m);
    let mut penalty = 0.0;
    for (g, wv) in gw.iter_mut().zip(w) {
        penalty += wv * wv;
        *g += l2 * wv;
    }
    nll * inv_m + 0.5 * l2 * penalty
}

impl LogregModel {
    pub fn fit(
        params: LogregParams,
        x: &Array2<f64>,
        y: &[usize],
        n_classes: usize,
    ) -> Result<Self> {
        params.validate()?;
        let n = x.ncols();
        let k = n_classes;
        let opts = LbfgsOptions {
            memory: params.memory,
            max_iter: params.max_iter,
            ..LbfgsOptions::default()
        };
        let xv = x.view();
        let result = lbfgs::minimize(
            |theta, grad| objective(theta, grad, xv, y, k, params.l2),
            vec![0.0; k * n + k],
            &opts,
        );
        if !result.f.is_finite() {
            return Err(Error::Numeric("logistic regression diverged".into()));
        }
        let weights = Array2::from_shape_vec((k, n), result.x[..k * n].to_vec())
            .map_err(|e| Error::Numeric(e.to_string()))?;
        Ok(Self {
            weights,
            bias: Array1::from(result.x[k * n..].to_vec()),
            loss_history: result.history,
        })
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .outer_iter()
            .zip(self.bias.iter())
            .map(|(w, b)| b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
            .collect()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.scores(x);
        softmax_in_place(&mut z);
        z
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        super::argmax(&self.scores(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        let x = Array2::from_shape_vec(
            (5, 2),
            vec![0.3, -1.0, 1.2, 0.4, -0.7, 0.9, 2.0, 1.0, 0.0, -0.5],
        )
        .unwrap();
        let y = [0, 1, 2, 1, 0];
        let theta: Vec<f64> = (0..9).map(|i| 0.1 * i as f64 - 0.4).collect();
        let mut g = vec![0.0; 9];
        objective(&theta, &mut g, x.view(), &y, 3, 1.0);
        let mut scratch = vec![0.0; 9];
        for j in 0..9 {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[j] += 1e-6;
            tm[j] -= 1e-6;
            let fd = (objective(&tp, &mut scratch, x.view(), &y, 3, 1.0)
                - objective(&tm, &mut scratch, x.view(), &y, 3, 1.0))
                / 2e-6;
            assert!((fd - g[j]).abs() < 1e-7, "param {j}: {fd} vs {}", g[j]);
        }
    }
}
