//! k-nearest neighbors over a ball tree.
//!
//! Neighbors are ordered by `(distance, training index)`, so the k-set is
//! unique even with duplicate points and always equals a linear scan.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
    pub leaf_size: usize,
    /// Minkowski order; only the Euclidean case `p = 2` is supported.
    pub p: f64,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self {
            k: 5,
            leaf_size: 30,
            p: 2.0,
        }
    }
}

impl KnnParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        if self.leaf_size == 0 {
            return Err(Error::InvalidInput("leaf size must be >= 1".into()));
        }
        if self.p != 2.0 {
            return Err(Error::InvalidInput(format!(
                "only Minkowski p = 2 is supported, got {}",
                self.p
            )));
        }
        Ok(())
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist2: f64,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    center: Vec<f64>,
    radius: f64,
    children: Option<(usize, usize)>,
}

/// Ball tree with bounded leaves. Internal nodes split on the dimension of
/// largest spread at the median point.
#[derive(Debug, Clone)]
pub struct BallTree {
    points: Array2<f64>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    leaf_size: usize,
}

impl BallTree {
    pub fn build(points: Array2<f64>, leaf_size: usize) -> Self {
        let n = points.nrows();
        let mut tree = Self {
            points,
            order: (0..n).collect(),
            nodes: Vec::new(),
            leaf_size: leaf_size.max(1),
        };
        if n > 0 {
            tree.build_node(0, n);
        }
        tree
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let dim = self.points.ncols();
        let mut center = vec![0.0; dim];
        for &i in &self.order[start..end] {
            for (c, v) in center.iter_mut().zip(self.points.row(i)) {
                *c += v;
            }
        }
        let count = (end - start) as f64;
        center.iter_mut().for_each(|c| *c /= count);
        let radius = self.order[start..end]
            .iter()
            .map(|&i| squared_distance(&center, self.points.row(i).as_slice().unwrap()))
            .fold(0.0_f64, f64::max)
            .sqrt();
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            center,
            radius,
            children: None,
        });
        if end - start > self.leaf_size {
            let mut split_dim = 0;
            let mut best_spread = f64::NEG_INFINITY;
            for d in 0..dim {
                let (lo, hi) = self.order[start..end].iter().fold(
                    (f64::INFINITY, f64::NEG_INFINITY),
                    |(lo, hi), &i| {
                        let v = self.points[[i, d]];
                        (lo.min(v), hi.max(v))
                    },
                );
                if hi - lo > best_spread {
                    best_spread = hi - lo;
                    split_dim = d;
                }
            }
            let mid = start + (end - start) / 2;
            let points = &self.points;
            self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                points[[a, split_dim]]
                    .total_cmp(&points[[b, split_dim]])
                    .then(a.cmp(&b))
            });
            let left = self.build_node(start, mid);
            let right = self.build_node(mid, end);
            self.nodes[id].children = Some((left, right));
        }
        id
    }

    /// The `k` nearest training points to `query`, closest first.
    pub fn query(&self, query: &[f64], k: usize) -> Vec<Neighbor> {
        let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
        if k > 0 && !self.nodes.is_empty() {
            self.search(0, query, k, &mut heap);
        }
        heap.into_sorted_vec()
    }

    fn search(&self, node: usize, query: &[f64], k: usize, heap: &mut BinaryHeap<Neighbor>) {
        let n = &self.nodes[node];
        if heap.len() == k {
            let worst = heap.peek().expect("heap is full").dist2.sqrt();
            let lower = squared_distance(query, &n.center).sqrt() - n.radius;
            // keep candidates that could tie with the current worst
            if lower > worst * (1.0 + 1e-12) + 1e-12 {
                return;
            }
        }
        match n.children {
            None => {
                for &i in &self.order[n.start..n.end] {
                    let cand = Neighbor {
                        index: i,
                        dist2: squared_distance(query, self.points.row(i).as_slice().unwrap()),
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Some((l, r)) => {
                let dl = squared_distance(query, &self.nodes[l].center);
                let dr = squared_distance(query, &self.nodes[r].center);
                let (first, second) = if dl <= dr { (l, r) } else { (r, l) };
                self.search(first, query, k, heap);
                self.search(second, query, k, heap);
            }
        }
    }
}

/// Majority vote; ties go to the tied class whose member is nearest.
pub fn vote(neighbors: &[Neighbor], labels: &[usize], n_classes: usize) -> usize {
    let mut votes = vec![0usize; n_classes];
    for nb in neighbors {
        votes[labels[nb.index]] += 1;
    }
    let top = votes.iter().copied().max().unwrap_or(0);
    neighbors
        .iter()
        .map(|nb| labels[nb.index])
        .find(|&c| votes[c] == top)
        .unwrap_or(0)
}

#[derive(Debug, Clone)]
pub struct KnnModel {
    pub params: KnnParams,
    pub tree: BallTree,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl KnnModel {
    pub fn fit(
        params: KnnParams,
        x: &Array2<f64>,
        labels: &[usize],
        n_classes: usize,
    ) -> Result<Self> {
        params.validate()?;
        let x = x.as_standard_layout().to_owned();
        Ok(Self {
            params,
            tree: BallTree::build(x, params.leaf_size),
            labels: labels.to_vec(),
            n_classes,
        })
    }

    pub fn neighbors(&self, x: &[f64]) -> Vec<Neighbor> {
        self.tree.query(x, self.params.k)
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        vote(&self.neighbors(x), &self.labels, self.n_classes)
    }
}
