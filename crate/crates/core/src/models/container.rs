//! Self-describing JSON container shared by trained models and reference
//! tables.
//!
//! Top-level fields: `format_version`, `kind`, `target`, `hyperparameters`,
//! `scaler`, `classes`, `n_features`, `parameters`, and an optional
//! `provenance` block. Matrices are stored as nested lists of numbers.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::datasets::Target;
use crate::error::{Error, Result};
use crate::scaling::ScalerParams;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Container {
    pub format_version: u32,
    pub kind: String,
    pub target: Option<Target>,
    pub hyperparameters: Value,
    pub scaler: ScalerParams,
    /// Value each class index stands for (degrees or meters).
    pub classes: Vec<f64>,
    pub n_features: usize,
    pub parameters: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Value>,
}

pub fn from_value<T: DeserializeOwned>(v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Corrupt(e.to_string()))
}

impl Container {
    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::KindMismatch {
                expected: kind.to_string(),
                found: self.kind.clone(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| Error::Corrupt(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| Error::Corrupt(format!("not a container: {e}")))?;
        let version = v
            .get("format_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Corrupt("missing format_version".into()))?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(Error::Version(version.min(u64::from(u32::MAX)) as u32));
        }
        serde_json::from_value(v).map_err(|e| Error::Corrupt(e.to_string()))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Row-major nested lists from a matrix.
pub fn matrix_to_rows(m: &ndarray::Array2<f64>) -> Vec<Vec<f64>> {
    m.outer_iter().map(|r| r.to_vec()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<f64>], cols: usize) -> Result<ndarray::Array2<f64>> {
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Corrupt("ragged matrix".into()));
    }
    let data: Vec<f64> = rows.iter().flatten().copied().collect();
    ndarray::Array2::from_shape_vec((rows.len(), cols), data)
        .map_err(|e| Error::Corrupt(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Container {
        Container {
            format_version: FORMAT_VERSION,
            kind: "knn".into(),
            target: Some(Target::Angle),
            hyperparameters: json!({"k": 5}),
            scaler: ScalerParams::Raw,
            classes: vec![0.0, 5.0],
            n_features: 2,
            parameters: json!({"points": [[1.0, 2.0]]}),
            provenance: None,
        }
    }

    #[test]
    fn version_and_corruption() {
        let text = sample().to_json().unwrap();
        assert_eq!(Container::from_json(&text).unwrap(), sample());
        let v2 = text.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(Container::from_json(&v2), Err(Error::Version(2))));
        let truncated = &text[..text.len() / 2];
        assert!(matches!(
            Container::from_json(truncated),
            Err(Error::Corrupt(_))
        ));
        assert!(matches!(
            sample().expect_kind("svm"),
            Err(Error::KindMismatch { .. })
        ));
    }
}
