//! CART decision tree with Gini impurity.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtreeParams {
    pub max_depth: usize,
}

impl Default for DtreeParams {
    fn default() -> Self {
        Self { max_depth: 10 }
    }
}

impl DtreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidInput("max_depth must be >= 1".into()));
        }
        Ok(())
    }
}

/// `1 − Σ p_y²` over the class counts of a node.
pub fn gini(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidInput("gini of an empty node".into()));
    }
    Ok(gini_unchecked(counts, total))
}

fn gini_unchecked(counts: &[usize], total: usize) -> f64 {
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted child impurity `(n_l·G_l + n_r·G_r) / n`.
    pub cost: f64,
}

/// Best split of the rows `idx` of `x`; `None` when no feature has two
/// distinct values. Thresholds are midpoints of consecutive distinct sorted
/// values; samples with `x ≤ t` go left. Ties prefer the lower feature,
/// then the lower threshold.
pub fn best_split(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    idx: &[usize],
) -> Option<Split> {
    let n = idx.len();
    let mut total = vec![0usize; n_classes];
    for &i in idx {
        total[y[i]] += 1;
    }
    let mut best: Option<Split> = None;
    let mut order = idx.to_vec();
    let mut left = vec![0usize; n_classes];
    let mut right = vec![0usize; n_classes];
    for f in 0..x.ncols() {
        order.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]).then(a.cmp(&b)));
        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(&total);
        for k in 0..n - 1 {
            let i = order[k];
            left[y[i]] += 1;
            right[y[i]] -= 1;
            let v = x[[i, f]];
            let next = x[[order[k + 1], f]];
            if next <= v {
                continue;
            }
            let nl = k + 1;
            let nr = n - nl;
            let cost = (nl as f64 * gini_unchecked(&left, nl)
                + nr as f64 * gini_unchecked(&right, nr))
                / n as f64;
            let threshold = (v + next) / 2.0;
            if best.is_none_or(|b| cost < b.cost) {
                best = Some(Split {
                    feature: f,
                    threshold,
                    cost,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TreeNode {
    Leaf {
        class: usize,
        counts: Vec<usize>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        impurity: f64,
        split_cost: f64,
    },
}

/// Flat node list; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub params: DtreeParams,
    pub nodes: Vec<TreeNode>,
    pub n_classes: usize,
}

fn majority(counts: &[usize]) -> usize {
    // lowest class index among the most frequent
    let top = counts.iter().copied().max().unwrap_or(0);
    counts.iter().position(|&c| c == top).unwrap_or(0)
}

impl DecisionTree {
    pub fn fit(
        params: DtreeParams,
        x: &Array2<f64>,
        y: &[usize],
        n_classes: usize,
    ) -> Result<Self> {
        params.validate()?;
        let mut tree = Self {
            params,
            nodes: Vec::new(),
            n_classes,
        };
        let idx: Vec<usize> = (0..x.nrows()).collect();
        tree.grow(x.view(), y, idx, 0);
        Ok(tree)
    }

    fn grow(&mut self, x: ArrayView2<f64>, y: &[usize], idx: Vec<usize>, depth: usize) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        for &i in &idx {
            counts[y[i]] += 1;
        }
        let id = self.nodes.len();
        let impurity = gini_unchecked(&counts, idx.len().max(1));
        self.nodes.push(TreeNode::Leaf {
            class: majority(&counts),
            counts,
        });
        if depth >= self.params.max_depth || impurity == 0.0 || idx.len() < 2 {
            return id;
        }
        let Some(split) = best_split(x, y, self.n_classes, &idx) else {
            return id;
        };
        if split.cost >= impurity {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| x[[i, split.feature]] <= split.threshold);
        let left = self.grow(x, y, l, depth + 1);
        let right = self.grow(x, y, r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            impurity,
            split_cost: split.cost,
        };
        id
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { class, .. } => return *class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }
}
