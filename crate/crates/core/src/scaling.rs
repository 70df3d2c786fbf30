//! Feature pipelines: raw counts, per-sample unit norm, and per-feature
//! robust standardization.
//!
//! Pipelines follow a fit-on-train / transform-anywhere contract. Unit norm
//! has no fitted state; robust standardization stores one median and one
//! interquartile range per detector.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Order of the `l_p` norm used by [`unit_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub p: f64,
}

impl Default for NormSpec {
    fn default() -> Self {
        Self { p: 2.0 }
    }
}

impl NormSpec {
    pub fn new(p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "norm order must be >= 1, got {p}"
            )));
        }
        Ok(Self { p })
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        // scale by the largest magnitude first so large counts cannot overflow
        let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if peak == 0.0 || !peak.is_finite() {
            return peak;
        }
        let p = self.p;
        if p == 1.0 {
            x.iter().map(|v| v.abs()).sum()
        } else if p == 2.0 {
            peak * x
                .iter()
                .map(|v| (v / peak) * (v / peak))
                .sum::<f64>()
                .sqrt()
        } else if p.is_infinite() {
            peak
        } else {
            peak * x
                .iter()
                .map(|v| (v.abs() / peak).powf(p))
                .sum::<f64>()
                .powf(1.0 / p)
        }
    }
}

/// `x / ‖x‖_p`. Errors on the zero vector.
pub fn unit_norm(x: &[f64], spec: NormSpec) -> Result<Vec<f64>> {
    let n = spec.norm(x);
    if n == 0.0 {
        return Err(Error::Degenerate("unit norm of a zero vector".into()));
    }
    if !n.is_finite() {
        return Err(Error::Numeric("non-finite norm".into()));
    }
    Ok(x.iter().map(|v| v / n).collect())
}

/// Per-feature median and interquartile range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustParams {
    pub medians: Vec<f64>,
    /// `Q3 - Q1` per feature; 1 for features with zero spread.
    pub scales: Vec<f64>,
}

impl RobustParams {
    pub fn dim(&self) -> usize {
        self.medians.len()
    }
}

pub fn fit_robust(train: &Array2<f64>) -> Result<RobustParams> {
    let (m, n) = train.dim();
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput(
            "cannot fit a robust scaler on an empty matrix".into(),
        ));
    }
    if m < 4 {
        return Err(Error::InvalidInput(format!(
            "robust scaling needs at least 4 samples, got {m}"
        )));
    }
    let mut medians = Vec::with_capacity(n);
    let mut scales = Vec::with_capacity(n);
    for col in train.axis_iter(Axis(1)) {
        let sorted = stats::sorted_copy(&col.to_vec());
        medians.push(stats::quantile_sorted(&sorted, 0.5));
        let spread = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
        scales.push(if spread > 0.0 { spread } else { 1.0 });
    }
    Ok(RobustParams { medians, scales })
}

pub fn transform_robust(params: &RobustParams, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: x.len(),
        });
    }
    Ok(x.iter()
        .zip(params.medians.iter().zip(&params.scales))
        .map(|(v, (med, s))| (v - med) / s)
        .collect())
}

/// Which pipeline a model or experiment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalerKind {
    Raw,
    UnitNorm,
    Robust,
}

impl ScalerKind {
    pub const ALL: [ScalerKind; 3] = [ScalerKind::Raw, ScalerKind::UnitNorm, ScalerKind::Robust];

    pub fn as_str(self) -> &'static str {
        match self {
            ScalerKind::Raw => "raw",
            ScalerKind::UnitNorm => "unit-norm",
            ScalerKind::Robust => "robust",
        }
    }
}

impl std::str::FromStr for ScalerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" | "none" => Ok(ScalerKind::Raw),
            "unit-norm" | "unit_norm" | "unitnorm" => Ok(ScalerKind::UnitNorm),
            "robust" => Ok(ScalerKind::Robust),
            other => Err(Error::InvalidInput(format!("unknown scaler {other:?}"))),
        }
    }
}

impl std::fmt::Display for ScalerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fitted state of a feature pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalerParams {
    Raw,
    UnitNorm(NormSpec),
    Robust(RobustParams),
}

impl ScalerParams {
    pub fn fit(kind: ScalerKind, train: &Array2<f64>) -> Result<Self> {
        Ok(match kind {
            ScalerKind::Raw => ScalerParams::Raw,
            ScalerKind::UnitNorm => ScalerParams::UnitNorm(NormSpec::default()),
            ScalerKind::Robust => ScalerParams::Robust(fit_robust(train)?),
        })
    }

    pub fn kind(&self) -> ScalerKind {
        match self {
            ScalerParams::Raw => ScalerKind::Raw,
            ScalerParams::UnitNorm(_) => ScalerKind::UnitNorm,
            ScalerParams::Robust(_) => ScalerKind::Robust,
        }
    }

    /// Transforms one sample. An all-zero sample under unit norm maps to the
    /// zero vector instead of failing.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            ScalerParams::Raw => Ok(x.to_vec()),
            ScalerParams::UnitNorm(spec) => match unit_norm(x, *spec) {
                Err(Error::Degenerate(_)) => {
                    log::warn!("zero-count sample mapped to the zero vector");
                    Ok(vec![0.0; x.len()])
                }
                other => other,
            },
            ScalerParams::Robust(p) => transform_robust(p, x),
        }
    }

    pub fn transform_matrix(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let data = x
            .outer_iter()
            .map(|row| self.transform(&row.to_vec()))
            .collect::<Result<Vec<_>>>()?
            .concat();
        Array2::from_shape_vec(x.dim(), data).map_err(|e| Error::Numeric(e.to_string()))
    }
}
