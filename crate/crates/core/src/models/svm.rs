//! One-vs-rest soft-margin SVM with an RBF kernel, solved by SMO.
//!
//! Each binary problem is the dual
//! `min ½αᵀQα − eᵀα  s.t.  0 ≤ α ≤ C, yᵀα = 0` with `Q_ij = y_i y_j K_ij`,
//! optimized with second-order working-set selection.

use std::collections::{HashMap, VecDeque};

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub c: f64,
    /// `None` selects `1 / (n_features · Var(X))` at fit time.
    pub gamma: Option<f64>,
    pub tol: f64,
    /// Iteration cap, in multiples of the training-set size.
    pub max_passes: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_passes: 10_000,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidInput("C must be positive".into()));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidInput("gamma must be positive".into()));
            }
        }
        if !(self.tol > 0.0) || self.max_passes == 0 {
            return Err(Error::InvalidInput(
                "tol and max_passes must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// `1 / (n_features · Var(X))` over all entries; 1 when `X` is constant.
pub fn scale_gamma(x: &Array2<f64>) -> f64 {
    let n = x.len() as f64;
    if n == 0.0 {
        return 1.0;
    }
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0
    }
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Row-wise kernel access: precomputed for small sets, cached otherwise.
enum Kernel<'a> {
    Full(&'a Array2<f64>),
    Lazy {
        x: ArrayView2<'a, f64>,
        gamma: f64,
        cache: HashMap<usize, Vec<f64>>,
        order: VecDeque<usize>,
        capacity: usize,
    },
}

impl Kernel<'_> {
    fn row(&mut self, i: usize) -> &[f64] {
        match self {
            Kernel::Full(k) => k.row(i).to_slice().expect("standard layout"),
            Kernel::Lazy {
                x,
                gamma,
                cache,
                order,
                capacity,
            } => {
                if !cache.contains_key(&i) {
                    if order.len() == *capacity {
                        let old = order.pop_front().expect("non-empty");
                        cache.remove(&old);
                    }
                    let xi = x.row(i);
                    let xi = xi.as_slice().expect("standard layout");
                    let row = x
                        .outer_iter()
                        .map(|r| rbf(xi, r.as_slice().expect("standard layout"), *gamma))
                        .collect();
                    cache.insert(i, row);
                    order.push_back(i);
                }
                &cache[&i]
            }
        }
    }
}

/// Above this many samples the kernel matrix is not precomputed.
pub const FULL_KERNEL_LIMIT: usize = 3000;
const ROW_CACHE: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    /// `m(α) − M(α)` at termination; ≤ tol when converged.
    pub kkt_gap: f64,
    pub iterations: usize,
}

/// Solves one binary dual; `y` holds ±1.
fn solve_binary(
    kernel: &mut Kernel<'_>,
    y: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> BinarySolution {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    const TAU: f64 = 1e-12;
    let mut iterations = 0;
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
    let kkt_gap;
    loop {
        // i: maximal violating index in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            if in_low(alpha[t], y[t]) {
                gmin = gmin.min(-y[t] * grad[t]);
            }
        }
        let gap = gmax - gmin;
        if i_sel == usize::MAX || gap < tol || iterations >= max_iter {
            kkt_gap = if gap.is_finite() { gap.max(0.0) } else { 0.0 };
            break;
        }
        let i = i_sel;
        let ki = kernel.row(i).to_vec();
        // j: second-order selection in I_low
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let b = gmax + y[t] * grad[t];
            if b > 0.0 {
                let mut a = 2.0 - 2.0 * ki[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j_sel = t;
                }
            }
        }
        if j_sel == usize::MAX {
            kkt_gap = gap.max(0.0);
            break;
        }
        let j = j_sel;
        let kj = kernel.row(j).to_vec();
        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * ki[j];
        if y[i] != y[j] {
            let mut quad = 2.0 + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = 2.0 - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let dai = alpha[i] - ai_old;
        let daj = alpha[j] - aj_old;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj);
        }
        iterations += 1;
    }

    // rho: mean over free vectors, else the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    BinarySolution {
        alpha,
        rho,
        kkt_gap,
        iterations,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub gamma: f64,
    /// Union of support vectors over all one-vs-rest problems.
    pub support_vectors: Array2<f64>,
    /// `coef[c][s] = α_s·y_s` of class `c`'s problem for support vector `s`.
    pub coef: Array2<f64>,
    pub rho: Vec<f64>,
    /// Final KKT gap of each binary problem.
    pub kkt_gaps: Vec<f64>,
}

impl SvmModel {
    pub fn fit(
        params: SvmParams,
        x: &Array2<f64>,
        labels: &[usize],
        n_classes: usize,
    ) -> Result<Self> {
        params.validate()?;
        let x = x.as_standard_layout().to_owned();
        let n = x.nrows();
        let gamma = params.gamma.unwrap_or_else(|| scale_gamma(&x));
        let full = (n <= FULL_KERNEL_LIMIT).then(|| {
            let mut k = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..=i {
                    let v = rbf(
                        x.row(i).as_slice().expect("standard layout"),
                        x.row(j).as_slice().expect("standard layout"),
                        gamma,
                    );
                    k[[i, j]] = v;
                    k[[j, i]] = v;
                }
            }
            k
        });
        let max_iter = params.max_passes.saturating_mul(n.max(1));
        let solutions: Vec<BinarySolution> = (0..n_classes)
            .into_par_iter()
            .map(|c| {
                let y: Vec<f64> = labels
                    .iter()
                    .map(|&l| if l == c { 1.0 } else { -1.0 })
                    .collect();
                let mut kernel = match &full {
                    Some(k) => Kernel::Full(k),
                    None => Kernel::Lazy {
                        x: x.view(),
                        gamma,
                        cache: HashMap::new(),
                        order: VecDeque::new(),
                        capacity: ROW_CACHE,
                    },
                };
                solve_binary(&mut kernel, &y, params.c, params.tol, max_iter)
            })
            .collect();
        let sv: Vec<usize> = (0..n)
            .filter(|&i| solutions.iter().any(|s| s.alpha[i] > 0.0))
            .collect();
        let mut coef = Array2::zeros((n_classes, sv.len()));
        for (c, s) in solutions.iter().enumerate() {
            for (k, &i) in sv.iter().enumerate() {
                let yi = if labels[i] == c { 1.0 } else { -1.0 };
                coef[[c, k]] = s.alpha[i] * yi;
            }
        }
        let support_vectors = x.select(ndarray::Axis(0), &sv);
        if coef.iter().any(|v: &f64| !v.is_finite()) {
            return Err(Error::Numeric(
                "SMO produced non-finite coefficients".into(),
            ));
        }
        Ok(Self {
            gamma,
            support_vectors,
            coef,
            rho: solutions.iter().map(|s| s.rho).collect(),
            kkt_gaps: solutions.iter().map(|s| s.kkt_gap).collect(),
        })
    }

    /// One-vs-rest decision values `f_c(x) = Σ_s coef[c][s]·K(sv_s, x) − ρ_c`.
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        let k: Vec<f64> = self
            .support_vectors
            .outer_iter()
            .map(|s| rbf(s.as_slice().expect("standard layout"), x, self.gamma))
            .collect();
        self.coef
            .outer_iter()
            .zip(&self.rho)
            .map(|(row, rho)| row.iter().zip(&k).map(|(a, b)| a * b).sum::<f64>() - rho)
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        super::argmax(&self.decision_values(x))
    }
}
