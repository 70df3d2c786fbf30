//! Five classifiers behind one fit/predict contract.
//!
//! | kind    | training                                      | decision            |
//! |---------|-----------------------------------------------|---------------------|
//! | logreg  | multinomial softmax, L-BFGS, L2 1.0           | argmax score        |
//! | svm     | one-vs-rest RBF, SMO, C = 1                   | argmax decision     |
//! | knn     | ball tree, k = 5, Euclidean                   | majority vote       |
//! | dtree   | CART, Gini, depth ≤ 10                        | leaf majority       |
//! | mlp     | 3 × 15 ReLU, softmax, Adam, 300 epochs        | argmax probability  |
//!
//! A [`TrainedModel`] carries the fitted scaler so callers always pass raw
//! counts; see [`train`].

pub mod container;
pub mod dtree;
pub mod knn;
pub mod lbfgs;
pub mod logreg;
pub mod mlp;
pub mod svm;

use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::datasets::{Dataset, Target};
use crate::error::{Error, Result};
use crate::scaling::{ScalerKind, ScalerParams};
use container::{from_value, matrix_to_rows, rows_to_matrix, Container};
use dtree::{DecisionTree, DtreeParams};
use knn::{KnnModel, KnnParams};
use logreg::{LogregModel, LogregParams};
use mlp::{Architecture, MlpModel, MlpParams};
use svm::{SvmModel, SvmParams};

/// Replaces `z` by `softmax(z)` and returns `log Σ exp z`.
pub fn softmax_in_place(z: &mut [f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
    max + sum.ln()
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logreg,
    Svm,
    Knn,
    Dtree,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Logreg,
        ModelKind::Svm,
        ModelKind::Knn,
        ModelKind::Dtree,
        ModelKind::Mlp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logreg => "logreg",
            ModelKind::Svm => "svm",
            ModelKind::Knn => "knn",
            ModelKind::Dtree => "dtree",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown model kind {s:?}")))
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Model kind plus hyperparameters; only the section matching `kind` is
/// used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub seed: u64,
    pub logreg: LogregParams,
    pub svm: SvmParams,
    pub knn: KnnParams,
    pub dtree: DtreeParams,
    pub mlp: MlpParams,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::new(ModelKind::Knn)
    }
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            seed: 42,
            logreg: LogregParams::default(),
            svm: SvmParams::default(),
            knn: KnnParams::default(),
            dtree: DtreeParams::default(),
            mlp: MlpParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ModelKind::Logreg => self.logreg.validate(),
            ModelKind::Svm => self.svm.validate(),
            ModelKind::Knn => self.knn.validate(),
            ModelKind::Dtree => self.dtree.validate(),
            ModelKind::Mlp => self.mlp.validate(),
        }
    }

    /// Seed plus the active kind's hyperparameters.
    pub fn hyperparameters(&self) -> Value {
        let params = match self.kind {
            ModelKind::Logreg => serde_json::to_value(self.logreg),
            ModelKind::Svm => serde_json::to_value(self.svm),
            ModelKind::Knn => serde_json::to_value(self.knn),
            ModelKind::Dtree => serde_json::to_value(self.dtree),
            ModelKind::Mlp => serde_json::to_value(&self.mlp),
        }
        .expect("hyperparameters serialize");
        json!({ "seed": self.seed, "params": params })
    }

    fn from_hyperparameters(kind: ModelKind, v: &Value) -> Result<Self> {
        let mut cfg = ModelConfig::new(kind);
        cfg.seed = from_value(v.get("seed").unwrap_or(&Value::Null))?;
        let p = v.get("params").unwrap_or(&Value::Null);
        match kind {
            ModelKind::Logreg => cfg.logreg = from_value(p)?,
            ModelKind::Svm => cfg.svm = from_value(p)?,
            ModelKind::Knn => cfg.knn = from_value(p)?,
            ModelKind::Dtree => cfg.dtree = from_value(p)?,
            ModelKind::Mlp => cfg.mlp = from_value(p)?,
        }
        Ok(cfg)
    }
}

/// Post-scaling features with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl LabeledMatrix {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let m = Self {
            features: features.as_standard_layout().to_owned(),
            labels,
            n_classes,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let (rows, cols) = self.features.dim();
        if rows != self.labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows,
                got: self.labels.len(),
            });
        }
        if cols == 0 || self.n_classes == 0 {
            return Err(Error::InvalidInput(
                "need at least one feature and one class".into(),
            ));
        }
        if rows < self.n_classes {
            return Err(Error::InvalidInput(format!(
                "{rows} samples cannot cover {} classes",
                self.n_classes
            )));
        }
        for ((r, c), v) in self.features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
        let mut seen = vec![false; self.n_classes];
        for &l in &self.labels {
            if l >= self.n_classes {
                return Err(Error::Schema(format!(
                    "label {l} out of range for {} classes",
                    self.n_classes
                )));
            }
            seen[l] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::EmptyClass(c));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }
}

/// Learned parameters of one of the five kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Logreg(LogregModel),
    Svm(SvmModel),
    Knn(KnnModelParts),
    Dtree(DecisionTree),
    Mlp(MlpModel),
}

/// kNN state: the model plus what is needed to compare and persist it.
#[derive(Debug, Clone)]
pub struct KnnModelParts(pub KnnModel);

impl PartialEq for KnnModelParts {
    fn eq(&self, other: &Self) -> bool {
        self.0.params == other.0.params
            && self.0.labels == other.0.labels
            && self.0.tree.points() == other.0.tree.points()
    }
}

impl Fitted {
    fn predict(&self, x: &[f64]) -> usize {
        match self {
            Fitted::Logreg(m) => m.predict(x),
            Fitted::Svm(m) => m.predict(x),
            Fitted::Knn(m) => m.0.predict(x),
            Fitted::Dtree(m) => m.predict(x),
            Fitted::Mlp(m) => m.predict(x),
        }
    }

    /// Training-loss trace for the gradient-trained kinds.
    pub fn loss_history(&self) -> Option<&[f64]> {
        match self {
            Fitted::Logreg(m) => Some(&m.loss_history),
            Fitted::Mlp(m) => Some(&m.loss_history),
            _ => None,
        }
    }
}

/// Trains the configured kind on already-scaled features.
pub fn fit_raw(config: &ModelConfig, data: &LabeledMatrix) -> Result<Fitted> {
    config.validate()?;
    data.validate()?;
    let (x, y, k) = (&data.features, data.labels.as_slice(), data.n_classes);
    Ok(match config.kind {
        ModelKind::Logreg => Fitted::Logreg(LogregModel::fit(config.logreg, x, y, k)?),
        ModelKind::Svm => Fitted::Svm(SvmModel::fit(config.svm, x, y, k)?),
        ModelKind::Knn => Fitted::Knn(KnnModelParts(KnnModel::fit(config.knn, x, y, k)?)),
        ModelKind::Dtree => Fitted::Dtree(DecisionTree::fit(config.dtree, x, y, k)?),
        ModelKind::Mlp => Fitted::Mlp(MlpModel::fit(&config.mlp, x, y, k, config.seed)?),
    })
}

/// A fitted classifier with its feature pipeline and label space.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub scaler: ScalerParams,
    pub target: Option<Target>,
    /// Original class index of each internal class.
    pub class_ids: Vec<usize>,
    /// Value (degrees or meters) of each internal class.
    pub class_values: Vec<f64>,
    pub n_features: usize,
    pub fitted: Fitted,
}

/// Fits `config` on `data` with no scaling; class `i` predicts `i`.
pub fn fit(config: &ModelConfig, data: &LabeledMatrix) -> Result<TrainedModel> {
    let fitted = fit_raw(config, data)?;
    Ok(TrainedModel {
        config: config.clone(),
        scaler: ScalerParams::Raw,
        target: None,
        class_ids: (0..data.n_classes).collect(),
        class_values: (0..data.n_classes).map(|c| c as f64).collect(),
        n_features: data.n_features(),
        fitted,
    })
}

/// Full pipeline: fit the scaler on the training counts, transform, drop
/// classes without training samples, and fit the model.
pub fn train(
    config: &ModelConfig,
    scaler: ScalerKind,
    train_set: &Dataset,
    target: Target,
) -> Result<TrainedModel> {
    if train_set.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let raw = train_set.features();
    let scaler = ScalerParams::fit(scaler, &raw)?;
    let x = scaler.transform_matrix(&raw)?;
    let labels = train_set.labels(target);
    let values = train_set.class_values(target);
    let mut present = vec![false; values.len()];
    for &l in &labels {
        present[l] = true;
    }
    let class_ids: Vec<usize> = (0..values.len()).filter(|&c| present[c]).collect();
    let mut remap = vec![usize::MAX; values.len()];
    for (k, &c) in class_ids.iter().enumerate() {
        remap[c] = k;
    }
    let compact: Vec<usize> = labels.iter().map(|&l| remap[l]).collect();
    let data = LabeledMatrix::new(x, compact, class_ids.len())?;
    let fitted = fit_raw(config, &data)?;
    Ok(TrainedModel {
        config: config.clone(),
        scaler,
        target: Some(target),
        class_values: class_ids.iter().map(|&c| values[c]).collect(),
        class_ids,
        n_features: data.n_features(),
        fitted,
    })
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Internal class index for already-scaled features.
    pub fn predict_scaled(&self, x: &[f64]) -> Result<usize> {
        self.check_dim(x)?;
        Ok(self.fitted.predict(x))
    }

    /// Original class index for raw counts.
    pub fn predict(&self, counts: &[f64]) -> Result<usize> {
        self.check_dim(counts)?;
        let x = self.scaler.transform(counts)?;
        Ok(self.class_ids[self.fitted.predict(&x)])
    }

    /// Class value (degrees or meters) for raw counts.
    pub fn predict_value(&self, counts: &[f64]) -> Result<f64> {
        self.check_dim(counts)?;
        let x = self.scaler.transform(counts)?;
        Ok(self.class_values[self.fitted.predict(&x)])
    }

    /// Original class indices for each row of raw counts.
    pub fn predict_batch(&self, counts: &Array2<f64>) -> Result<Vec<usize>> {
        let rows: Vec<Vec<f64>> = counts.outer_iter().map(|r| r.to_vec()).collect();
        rows.par_iter().map(|r| self.predict(r)).collect()
    }

    pub fn to_container(&self, provenance: Option<Value>) -> Container {
        let model = match &self.fitted {
            Fitted::Logreg(m) => json!({
                "weights": matrix_to_rows(&m.weights),
                "bias": m.bias.to_vec(),
            }),
            Fitted::Svm(m) => json!({
                "gamma": m.gamma,
                "support_vectors": matrix_to_rows(&m.support_vectors),
                "coef": matrix_to_rows(&m.coef),
                "rho": m.rho,
                "kkt_gaps": m.kkt_gaps,
            }),
            Fitted::Knn(m) => json!({
                "points": matrix_to_rows(m.0.tree.points()),
                "labels": m.0.labels,
            }),
            Fitted::Dtree(m) => json!({ "nodes": m.nodes }),
            Fitted::Mlp(m) => json!({
                "layer_sizes": m.arch.sizes,
                "theta": m.theta,
            }),
        };
        Container {
            format_version: container::FORMAT_VERSION,
            kind: self.kind().as_str().to_string(),
            target: self.target,
            hyperparameters: self.config.hyperparameters(),
            scaler: self.scaler.clone(),
            classes: self.class_values.clone(),
            n_features: self.n_features,
            parameters: json!({ "class_ids": self.class_ids, "model": model }),
            provenance,
        }
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let kind: ModelKind = c.kind.parse().map_err(|_| Error::KindMismatch {
            expected: "one of logreg, svm, knn, dtree, mlp".into(),
            found: c.kind.clone(),
        })?;
        let config = ModelConfig::from_hyperparameters(kind, &c.hyperparameters)?;
        let class_ids: Vec<usize> =
            from_value(c.parameters.get("class_ids").unwrap_or(&Value::Null))?;
        let p = c
            .parameters
            .get("model")
            .ok_or_else(|| Error::Corrupt("missing model parameters".into()))?;
        let k = c.classes.len();
        let n = c.n_features;
        if class_ids.len() != k {
            return Err(Error::Corrupt(
                "class_ids and classes differ in length".into(),
            ));
        }
        fn field<T: serde::de::DeserializeOwned>(p: &Value, name: &str) -> Result<T> {
            from_value(
                p.get(name)
                    .ok_or_else(|| Error::Corrupt(format!("missing {name}")))?,
            )
        }
        let fitted = match kind {
            ModelKind::Logreg => {
                let weights = rows_to_matrix(&field::<Vec<Vec<f64>>>(p, "weights")?, n)?;
                let bias: Vec<f64> = field(p, "bias")?;
                if weights.nrows() != k || bias.len() != k {
                    return Err(Error::Corrupt("logreg shape does not match classes".into()));
                }
                Fitted::Logreg(LogregModel {
                    weights,
                    bias: bias.into(),
                    loss_history: vec![],
                })
            }
            ModelKind::Svm => {
                let support_vectors =
                    rows_to_matrix(&field::<Vec<Vec<f64>>>(p, "support_vectors")?, n)?;
                let coef =
                    rows_to_matrix(&field::<Vec<Vec<f64>>>(p, "coef")?, support_vectors.nrows())?;
                let rho: Vec<f64> = field(p, "rho")?;
                if coef.nrows() != k || rho.len() != k {
                    return Err(Error::Corrupt("svm shape does not match classes".into()));
                }
                Fitted::Svm(SvmModel {
                    gamma: field(p, "gamma")?,
                    support_vectors,
                    coef,
                    rho,
                    kkt_gaps: field(p, "kkt_gaps")?,
                })
            }
            ModelKind::Knn => {
                let points = rows_to_matrix(&field::<Vec<Vec<f64>>>(p, "points")?, n)?;
                let labels: Vec<usize> = field(p, "labels")?;
                if labels.len() != points.nrows() || labels.iter().any(|&l| l >= k) {
                    return Err(Error::Corrupt("knn labels do not match points".into()));
                }
                Fitted::Knn(KnnModelParts(KnnModel::fit(
                    config.knn, &points, &labels, k,
                )?))
            }
            ModelKind::Dtree => {
                let nodes: Vec<dtree::TreeNode> = field(p, "nodes")?;
                let ok = !nodes.is_empty()
                    && nodes.iter().all(|nd| match nd {
                        dtree::TreeNode::Leaf { class, .. } => *class < k,
                        dtree::TreeNode::Split {
                            feature,
                            left,
                            right,
                            ..
                        } => *feature < n && *left < nodes.len() && *right < nodes.len(),
                    });
                if !ok {
                    return Err(Error::Corrupt(
                        "decision tree nodes are inconsistent".into(),
                    ));
                }
                Fitted::Dtree(DecisionTree {
                    params: config.dtree,
                    nodes,
                    n_classes: k,
                })
            }
            ModelKind::Mlp => {
                let sizes: Vec<usize> = field(p, "layer_sizes")?;
                let theta: Vec<f64> = field(p, "theta")?;
                let arch = Architecture { sizes };
                if arch.sizes.len() < 2
                    || arch.sizes[0] != n
                    || *arch.sizes.last().expect("non-empty") != k
                    || arch.n_params() != theta.len()
                {
                    return Err(Error::Corrupt("mlp shape does not match".into()));
                }
                Fitted::Mlp(MlpModel {
                    arch,
                    theta,
                    loss_history: vec![],
                })
            }
        };
        Ok(Self {
            config,
            scaler: c.scaler.clone(),
            target: c.target,
            class_ids,
            class_values: c.classes.clone(),
            n_features: n,
            fitted,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_container(None).write(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_container(&Container::read(path)?)
    }
}
