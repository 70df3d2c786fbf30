//! Reference-table baseline for source bearing.
//!
//! A known source is stepped around the array at one fixed distance and the
//! mean detector response `Γ(θ)` is recorded per calibration angle. A query
//! is assigned the calibration angle whose row is closest in squared error.

use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::SourcePose;
use crate::models::container::{self, Container};
use crate::rng::{self, tag};
use crate::scaling::{unit_norm, NormSpec, ScalerParams};
use crate::transport::{expected_counts, sample_counts, Scene};

pub const REFERENCE_TABLE_KIND: &str = "reference_table";

/// How calibration rows are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationMode {
    /// Rows are the analytic expected counts.
    Noiseless,
    /// Rows are means of Poisson-sampled acquisitions.
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    pub angles: Vec<f64>,
    /// Meters.
    pub distance: f64,
    pub replicates: usize,
    pub mode: CalibrationMode,
    pub seed: u64,
}

impl CalibrationSpec {
    pub const DEFAULT_DISTANCE: f64 = 2.0;
    pub const DEFAULT_REPLICATES: usize = 100;

    pub fn new(angles: Vec<f64>) -> Self {
        Self {
            angles,
            distance: Self::DEFAULT_DISTANCE,
            replicates: Self::DEFAULT_REPLICATES,
            mode: CalibrationMode::Poisson,
            seed: 42,
        }
    }
}

/// How a query is compared against the table rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueryMode {
    /// Raw counts against raw rows (the baseline).
    #[default]
    Raw,
    /// Unit-normed query against unit-normed rows.
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTable {
    /// Degrees, one per row, ascending.
    pub calib_angles: Vec<f64>,
    /// `responses[i][d]`: mean counts of detector `d` at `calib_angles[i]`.
    pub responses: Vec<Vec<f64>>,
    pub calib_distance: f64,
    pub calib_activity: f64,
    pub calib_time: f64,
}

/// Measures `Γ(θ)` for every calibration angle.
pub fn calibrate(template: &Scene, spec: &CalibrationSpec) -> Result<ReferenceTable> {
    if spec.replicates == 0 {
        return Err(Error::InvalidInput("replicates must be >= 1".into()));
    }
    if spec.angles.is_empty() {
        return Err(Error::InvalidInput("no calibration angles".into()));
    }
    let mut angles: Vec<f64> = spec.angles.iter().map(|a| a.rem_euclid(360.0)).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    let mut responses = Vec::with_capacity(angles.len());
    for (i, &angle) in angles.iter().enumerate() {
        let scene = template.with_pose(SourcePose::new(spec.distance, angle));
        let lambda = expected_counts(&scene)?;
        let row = match spec.mode {
            CalibrationMode::Noiseless => lambda.into_inner(),
            CalibrationMode::Poisson => {
                let mut acc = vec![0.0; lambda.len()];
                let mut seeds = rng::stream(spec.seed, &[tag::CALIBRATE, i as u64]);
                for _ in 0..spec.replicates {
                    let draw = sample_counts(&lambda, seeds.random())?;
                    for (a, c) in acc.iter_mut().zip(draw.iter()) {
                        *a += c;
                    }
                }
                acc.iter().map(|a| a / spec.replicates as f64).collect()
            }
        };
        responses.push(row);
    }
    Ok(ReferenceTable {
        calib_angles: angles,
        responses,
        calib_distance: spec.distance,
        calib_activity: template.source.activity,
        calib_time: template.acquisition.live_time,
    })
}

fn sse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl ReferenceTable {
    pub fn n_detectors(&self) -> usize {
        self.responses.first().map_or(0, Vec::len)
    }

    /// Row index minimizing the squared error to `x`; ties go to the
    /// smallest angle.
    pub fn predict_index(&self, x: &[f64], mode: QueryMode) -> Result<usize> {
        if x.len() != self.n_detectors() {
            return Err(Error::DimensionMismatch {
                expected: self.n_detectors(),
                got: x.len(),
            });
        }
        let query = match mode {
            QueryMode::Raw => x.to_vec(),
            QueryMode::Normalized => unit_norm(x, NormSpec::default())?,
        };
        let mut best = 0;
        let mut best_cost = f64::INFINITY;
        for (i, row) in self.responses.iter().enumerate() {
            let cost = match mode {
                QueryMode::Raw => sse(row, &query),
                QueryMode::Normalized => sse(&unit_norm(row, NormSpec::default())?, &query),
            };
            if cost < best_cost {
                best = i;
                best_cost = cost;
            }
        }
        Ok(best)
    }

    /// Predicted bearing in degrees for raw counts `x`.
    pub fn predict_angle(&self, x: &[f64]) -> Result<f64> {
        Ok(self.calib_angles[self.predict_index(x, QueryMode::Raw)?])
    }

    pub fn predict_angle_with(&self, x: &[f64], mode: QueryMode) -> Result<f64> {
        Ok(self.calib_angles[self.predict_index(x, mode)?])
    }

    pub fn to_container(&self, provenance: Option<serde_json::Value>) -> Container {
        Container {
            format_version: container::FORMAT_VERSION,
            kind: REFERENCE_TABLE_KIND.to_string(),
            target: Some(crate::datasets::Target::Angle),
            hyperparameters: json!({
                "calib_distance": self.calib_distance,
                "calib_activity": self.calib_activity,
                "calib_time": self.calib_time,
            }),
            scaler: ScalerParams::Raw,
            classes: self.calib_angles.clone(),
            n_features: self.n_detectors(),
            parameters: json!({ "responses": self.responses }),
            provenance,
        }
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind(REFERENCE_TABLE_KIND)?;
        #[derive(Deserialize)]
        struct Hyper {
            calib_distance: f64,
            calib_activity: f64,
            calib_time: f64,
        }
        #[derive(Deserialize)]
        struct Params {
            responses: Vec<Vec<f64>>,
        }
        let h: Hyper = container::from_value(&c.hyperparameters)?;
        let p: Params = container::from_value(&c.parameters)?;
        if p.responses.len() != c.classes.len()
            || p.responses.iter().any(|r| r.len() != c.n_features)
        {
            return Err(Error::Corrupt(
                "reference table shape does not match".into(),
            ));
        }
        Ok(Self {
            calib_angles: c.classes.clone(),
            responses: p.responses,
            calib_distance: h.calib_distance,
            calib_activity: h.calib_activity,
            calib_time: h.calib_time,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_container(None).write(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_container(&Container::read(path)?)
    }
}
