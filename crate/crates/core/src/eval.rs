//! Evaluation metrics: circular angular error, exact-match accuracy,
//! distance-bin accuracy, relative distance error and 95% intervals.
//!
//! Aggregates are computed over sorted per-sample values, so a metric does
//! not depend on the order of the test set.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{Dataset, Target};
use crate::error::{Error, Result};
use crate::models::TrainedModel;
use crate::reftable::{QueryMode, ReferenceTable};
use crate::rng::{self, tag};
use crate::scaling::ScalerKind;
use crate::stats;

/// Shortest arc between two bearings, in `[0, 180]` degrees.
pub fn circular_error(pred: f64, truth: f64) -> f64 {
    let d = (pred - truth).abs().rem_euclid(360.0);
    d.min(360.0 - d)
}

fn sorted_sum(values: &[f64]) -> f64 {
    stats::sorted_copy(values).iter().sum()
}

fn order_free_mean(values: &[f64]) -> f64 {
    sorted_sum(values) / values.len() as f64
}

/// Mean and normal-approximation half-width `1.96·s/√n`.
pub fn mean_ci95(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "a confidence interval needs at least 2 values, got {n}"
        )));
    }
    let sorted = stats::sorted_copy(values);
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let ss: f64 = stats::sorted_copy(
        &sorted
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .collect::<Vec<_>>(),
    )
    .iter()
    .sum();
    let s = (ss / (n - 1) as f64).sqrt();
    Ok((mean, 1.96 * s / (n as f64).sqrt()))
}

/// Mean and half the width of the 2.5–97.5% percentile interval of
/// `resamples` bootstrap means.
pub fn bootstrap_ci95(values: &[f64], resamples: usize, seed: u64) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 || resamples < 2 {
        return Err(Error::InvalidInput(
            "bootstrap needs at least 2 values and 2 resamples".into(),
        ));
    }
    let sorted = stats::sorted_copy(values);
    let mut r = rng::stream(seed, &[tag::BOOTSTRAP]);
    let mut means = Vec::with_capacity(resamples);
    let mut buf = vec![0.0; n];
    for _ in 0..resamples {
        for b in buf.iter_mut() {
            *b = sorted[r.random_range(0..n)];
        }
        means.push(order_free_mean(&buf));
    }
    means.sort_by(f64::total_cmp);
    let lo = stats::quantile_sorted(&means, 0.025);
    let hi = stats::quantile_sorted(&means, 0.975);
    Ok((order_free_mean(&sorted), (hi - lo) / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum CiMethod {
    #[default]
    Normal,
    Bootstrap {
        resamples: usize,
        seed: u64,
    },
}

impl CiMethod {
    pub const DEFAULT_RESAMPLES: usize = 1000;

    pub fn interval(&self, values: &[f64]) -> Result<(f64, f64)> {
        match *self {
            CiMethod::Normal => mean_ci95(values),
            CiMethod::Bootstrap { resamples, seed } => bootstrap_ci95(values, resamples, seed),
        }
    }
}

/// A mean with its 95% half-width (0 when fewer than two values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
}

fn estimate(values: &[f64], ci: &CiMethod) -> Result<Estimate> {
    match values.len() {
        0 => Err(Error::InvalidInput("no values to aggregate".into())),
        1 => Ok(Estimate {
            mean: values[0],
            ci95: 0.0,
        }),
        _ => {
            let (mean, ci95) = ci.interval(values)?;
            Ok(Estimate { mean, ci95 })
        }
    }
}

/// Metrics restricted to one true source distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMetrics {
    pub distance: f64,
    pub n: usize,
    pub angle_accuracy: Option<f64>,
    pub mean_angular_error: Option<f64>,
    pub distance_bin_accuracy: Option<f64>,
    pub mean_relative_distance_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub target: Target,
    pub n_samples: usize,
    /// Degrees.
    pub mean_angular_error: Option<Estimate>,
    pub angle_accuracy: Option<f64>,
    pub distance_bin_accuracy: Option<f64>,
    /// Percent of the true distance, bin midpoint as the point estimate.
    pub mean_relative_distance_error: Option<Estimate>,
    pub median_relative_distance_error: Option<f64>,
    /// Test samples with no counts at all (mapped to the zero vector under
    /// unit-norm scaling).
    pub zero_count_samples: usize,
    pub per_distance: Vec<DistanceMetrics>,
}

/// Something that maps raw counts to a class of the test set's label space.
#[derive(Debug, Clone, Copy)]
pub enum Predictor<'a> {
    Model(&'a TrainedModel),
    Table(&'a ReferenceTable, QueryMode),
}

impl Predictor<'_> {
    pub fn target(&self) -> Result<Target> {
        match self {
            Predictor::Model(m) => m
                .target
                .ok_or_else(|| Error::InvalidInput("model has no target attached".into())),
            Predictor::Table(..) => Ok(Target::Angle),
        }
    }

    fn n_features(&self) -> usize {
        match self {
            Predictor::Model(m) => m.n_features,
            Predictor::Table(t, _) => t.n_detectors(),
        }
    }

    /// Predicted value: degrees or bin-midpoint meters.
    fn predict_value(&self, counts: &[f64]) -> Result<f64> {
        match self {
            Predictor::Model(m) => m.predict_value(counts),
            Predictor::Table(t, mode) => t.predict_angle_with(counts, *mode),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    /// Expected scaler of a model predictor; a different one is an error.
    pub pipeline: Option<ScalerKind>,
    pub ci: CiMethod,
}

/// Evaluates `predictor` on every sample of `test`.
pub fn evaluate(predictor: Predictor<'_>, test: &Dataset, opts: &EvalOptions) -> Result<Metrics> {
    if test.is_empty() {
        return Err(Error::InvalidInput("empty test set".into()));
    }
    if let (Some(want), Predictor::Model(m)) = (opts.pipeline, predictor) {
        if m.scaler.kind() != want {
            return Err(Error::InvalidInput(format!(
                "pipeline mismatch: model was trained with {} scaling, evaluation requested {want}",
                m.scaler.kind()
            )));
        }
    }
    if predictor.n_features() != test.n_detectors {
        return Err(Error::DimensionMismatch {
            expected: predictor.n_features(),
            got: test.n_detectors,
        });
    }
    let target = predictor.target()?;
    let preds: Vec<f64> = test
        .samples
        .par_iter()
        .map(|s| predictor.predict_value(&s.counts))
        .collect::<Result<_>>()?;
    let zero_count_samples = test
        .samples
        .iter()
        .filter(|s| s.counts.iter().all(|&c| c == 0.0))
        .count();

    // per-sample scores
    let mut hits = Vec::with_capacity(test.len());
    let mut errs = Vec::with_capacity(test.len());
    for (s, &p) in test.samples.iter().zip(&preds) {
        match target {
            Target::Angle => {
                let class_angle = test.angle_classes[s.angle_label];
                hits.push(f64::from(u8::from(circular_error(p, class_angle) < 1e-9)));
                errs.push(circular_error(p, s.true_angle));
            }
            Target::Distance => {
                let bin = test.bin_spec.midpoint(s.distance_label);
                hits.push(f64::from(u8::from((p - bin).abs() < 1e-9)));
                errs.push(100.0 * (p - s.true_distance).abs() / s.true_distance);
            }
        }
    }

    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, s) in test.samples.iter().enumerate() {
        groups.entry(s.true_distance.to_bits()).or_default().push(i);
    }
    let mut per_distance: Vec<DistanceMetrics> = groups
        .into_values()
        .map(|idx| {
            let h: Vec<f64> = idx.iter().map(|&i| hits[i]).collect();
            let e: Vec<f64> = idx.iter().map(|&i| errs[i]).collect();
            let (acc, err) = (order_free_mean(&h), order_free_mean(&e));
            let angle = target == Target::Angle;
            DistanceMetrics {
                distance: test.samples[idx[0]].true_distance,
                n: idx.len(),
                angle_accuracy: angle.then_some(acc),
                mean_angular_error: angle.then_some(err),
                distance_bin_accuracy: (!angle).then_some(acc),
                mean_relative_distance_error: (!angle).then_some(err),
            }
        })
        .collect();
    per_distance.sort_by(|a, b| a.distance.total_cmp(&b.distance));

    let accuracy = order_free_mean(&hits);
    let err = estimate(&errs, &opts.ci)?;
    Ok(match target {
        Target::Angle => Metrics {
            target,
            n_samples: test.len(),
            mean_angular_error: Some(err),
            angle_accuracy: Some(accuracy),
            distance_bin_accuracy: None,
            mean_relative_distance_error: None,
            median_relative_distance_error: None,
            zero_count_samples,
            per_distance,
        },
        Target::Distance => Metrics {
            target,
            n_samples: test.len(),
            mean_angular_error: None,
            angle_accuracy: None,
            distance_bin_accuracy: Some(accuracy),
            mean_relative_distance_error: Some(err),
            median_relative_distance_error: Some(stats::median(&errs)),
            zero_count_samples,
            per_distance,
        },
    })
}

/// One line of the flat metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub predictor: String,
    pub scaler: String,
    pub dataset: String,
    pub target: String,
    /// `overall`, or `distance` for a per-distance row.
    pub scope: String,
    pub distance_m: Option<f64>,
    pub n: usize,
    pub angle_accuracy: Option<f64>,
    pub mean_angular_error_deg: Option<f64>,
    pub mean_angular_error_ci95: Option<f64>,
    pub distance_bin_accuracy: Option<f64>,
    pub mean_relative_distance_error_pct: Option<f64>,
    pub mean_relative_distance_error_ci95: Option<f64>,
    pub median_relative_distance_error_pct: Option<f64>,
}

pub const SCOPE_OVERALL: &str = "overall";
pub const SCOPE_DISTANCE: &str = "distance";

/// The overall row followed by one row per true distance.
pub fn metrics_rows(m: &Metrics, predictor: &str, scaler: &str, dataset: &str) -> Vec<MetricsRow> {
    let base = MetricsRow {
        predictor: predictor.to_string(),
        scaler: scaler.to_string(),
        dataset: dataset.to_string(),
        target: m.target.as_str().to_string(),
        scope: SCOPE_OVERALL.to_string(),
        distance_m: None,
        n: m.n_samples,
        angle_accuracy: m.angle_accuracy,
        mean_angular_error_deg: m.mean_angular_error.map(|e| e.mean),
        mean_angular_error_ci95: m.mean_angular_error.map(|e| e.ci95),
        distance_bin_accuracy: m.distance_bin_accuracy,
        mean_relative_distance_error_pct: m.mean_relative_distance_error.map(|e| e.mean),
        mean_relative_distance_error_ci95: m.mean_relative_distance_error.map(|e| e.ci95),
        median_relative_distance_error_pct: m.median_relative_distance_error,
    };
    let mut rows = vec![base.clone()];
    for d in &m.per_distance {
        rows.push(MetricsRow {
            scope: SCOPE_DISTANCE.to_string(),
            distance_m: Some(d.distance),
            n: d.n,
            angle_accuracy: d.angle_accuracy,
            mean_angular_error_deg: d.mean_angular_error,
            mean_angular_error_ci95: None,
            distance_bin_accuracy: d.distance_bin_accuracy,
            mean_relative_distance_error_pct: d.mean_relative_distance_error,
            mean_relative_distance_error_ci95: None,
            median_relative_distance_error_pct: None,
            ..base.clone()
        });
    }
    rows
}

/// Writes `rows` as CSV, preceded by `# `-prefixed comment lines.
pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W, comments: &[String]) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(true)
        .from_writer(&mut out);
    if rows.is_empty() {
        w.write_record(METRICS_COLUMNS)
            .map_err(|e| Error::Corrupt(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::Corrupt(e.to_string()))?;
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(())
}

pub const METRICS_COLUMNS: [&str; 14] = [
    "predictor",
    "scaler",
    "dataset",
    "target",
    "scope",
    "distance_m",
    "n",
    "angle_accuracy",
    "mean_angular_error_deg",
    "mean_angular_error_ci95",
    "distance_bin_accuracy",
    "mean_relative_distance_error_pct",
    "mean_relative_distance_error_ci95",
    "median_relative_distance_error_pct",
];

/// Reads a metrics CSV, skipping `#` comment lines.
pub fn read_metrics_csv<R: std::io::Read>(input: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let headers = r
        .headers()
        .map_err(|e| Error::Schema(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != METRICS_COLUMNS {
        return Err(Error::Schema(format!(
            "unexpected metrics header: {headers:?}"
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Schema(e.to_string())))
        .collect()
}

/// Rows of an accuracy-vs-distance pivot: distance and one cell per series.
pub type PivotRows = Vec<(f64, Vec<Option<f64>>)>;

/// Pivots per-distance rows into an accuracy-vs-distance table: one row per
/// distance, one column per `predictor/scaler/target` series. Angle series
/// report angle accuracy, distance series distance-bin accuracy.
pub fn accuracy_by_distance(rows: &[MetricsRow]) -> (Vec<String>, PivotRows) {
    let mut series: Vec<String> = Vec::new();
    let mut table: BTreeMap<u64, BTreeMap<usize, f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.scope == SCOPE_DISTANCE) {
        let Some(d) = r.distance_m else { continue };
        let name = format!("{}/{}/{}/{}", r.dataset, r.predictor, r.scaler, r.target);
        let col = match series.iter().position(|s| *s == name) {
            Some(c) => c,
            None => {
                series.push(name);
                series.len() - 1
            }
        };
        if let Some(acc) = r.angle_accuracy.or(r.distance_bin_accuracy) {
            table.entry(d.to_bits()).or_default().insert(col, acc);
        }
    }
    let mut out: Vec<(f64, Vec<Option<f64>>)> = table
        .into_iter()
        .map(|(bits, cols)| {
            (
                f64::from_bits(bits),
                (0..series.len()).map(|c| cols.get(&c).copied()).collect(),
            )
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    (series, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn circular_examples() {
        assert_eq!(circular_error(10.0, 350.0), 20.0);
        assert_eq!(circular_error(123.0, 123.0), 0.0);
        assert_eq!(circular_error(0.0, 180.0), 180.0);
        assert_eq!(circular_error(-90.0, 630.0), 0.0);
    }

    #[test]
    fn ci_examples() {
        assert_eq!(mean_ci95(&[2.5; 7]).unwrap(), (2.5, 0.0));
        let (m, h) = mean_ci95(&[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(m, 0.5);
        assert_abs_diff_eq!(h, 1.96 * 0.5f64.sqrt() / 2f64.sqrt(), epsilon = 1e-15);
        assert!(mean_ci95(&[1.0]).is_err());
    }

    #[test]
    fn bootstrap_is_seeded() {
        let v: Vec<f64> = (0..50).map(|i| (i * 7 % 13) as f64).collect();
        let a = bootstrap_ci95(&v, 1000, 3).unwrap();
        assert_eq!(a, bootstrap_ci95(&v, 1000, 3).unwrap());
        let (_, normal) = mean_ci95(&v).unwrap();
        assert!((a.1 / normal - 1.0).abs() < 0.2, "{a:?} vs {normal}");
    }

    #[test]
    fn pivot() {
        let mk = |pred: &str, d: f64, acc: f64| MetricsRow {
            predictor: pred.into(),
            scaler: "raw".into(),
            dataset: "t".into(),
            target: "angle".into(),
            scope: SCOPE_DISTANCE.into(),
            distance_m: Some(d),
            n: 1,
            angle_accuracy: Some(acc),
            mean_angular_error_deg: None,
            mean_angular_error_ci95: None,
            distance_bin_accuracy: None,
            mean_relative_distance_error_pct: None,
            mean_relative_distance_error_ci95: None,
            median_relative_distance_error_pct: None,
        };
        let rows = vec![mk("a", 2.0, 0.5), mk("b", 1.0, 0.25), mk("a", 1.0, 1.0)];
        let (series, table) = accuracy_by_distance(&rows);
        assert_eq!(series, vec!["t/a/raw/angle", "t/b/raw/angle"]);
        assert_eq!(table[0], (1.0, vec![Some(1.0), Some(0.25)]));
        assert_eq!(table[1], (2.0, vec![Some(0.5), None]));
    }
}
