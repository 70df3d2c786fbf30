//! Scenario grids, labelled samples, splits and CSV persistence.
//!
//! A [`ScenarioGrid`] enumerates source poses (angle × distance ×
//! replicate) around a template [`Scene`]; [`generate`] turns it into a
//! [`Dataset`] whose samples carry the per-detector counts together with an
//! angle class (index into the grid angles) and a distance bin (Freedman–
//! Diaconis bins over the true distances).

mod csv_io;
mod presets;

pub use csv_io::{read_csv, read_csv_from, write_csv, write_csv_to, CSV_META_PREFIX};
pub use presets::{preset, preset_names, Preset, MU_CONCRETE};

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Obstruction, SourcePose};
use crate::rng::{self, tag};
use crate::stats;
use crate::transport::{expected_counts, mc_counts, sample_counts, CountVector, Scene};

/// How obstructions are placed for each generated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "obstructions", rename_all = "kebab-case")]
pub enum ObstructionPolicy {
    None,
    /// The same obstructions in every sample.
    Fixed(Vec<Obstruction>),
    /// One candidate drawn uniformly per sample.
    Moving(Vec<Obstruction>),
}

/// Which forward model produces the counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum TransportMode {
    /// Noiseless analytic means.
    Expected,
    /// Poisson draws around the analytic means.
    Poisson,
    MonteCarlo {
        n_photons: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGrid {
    /// Degrees.
    pub angles: Vec<f64>,
    /// Meters.
    pub distances: Vec<f64>,
    pub obstruction_policy: ObstructionPolicy,
    pub replicates: usize,
    pub transport_mode: TransportMode,
    pub seed: u64,
}

impl ScenarioGrid {
    pub fn validate(&self) -> Result<()> {
        if self.angles.is_empty() || self.distances.is_empty() {
            return Err(Error::InvalidInput(
                "scenario grid needs at least one angle and one distance".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidInput("replicates must be >= 1".into()));
        }
        if self.distances.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidInput(
                "distances must be finite and > 0".into(),
            ));
        }
        if self.angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("angles must be finite".into()));
        }
        if let ObstructionPolicy::Moving(c) = &self.obstruction_policy {
            if c.is_empty() {
                return Err(Error::InvalidInput(
                    "moving obstruction policy needs at least one candidate".into(),
                ));
            }
        }
        if let TransportMode::MonteCarlo { n_photons: 0 } = self.transport_mode {
            return Err(Error::InvalidInput("n_photons must be > 0".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.angles.len() * self.distances.len() * self.replicates
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Evenly stepped values `start, start + step, ...` up to `end` inclusive.
pub fn stepped(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// `n` evenly spaced values on `[start, end]`.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Histogram bins over distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    /// Strictly increasing, `n_bins + 1` entries.
    pub edges: Vec<f64>,
    pub width: f64,
}

impl BinSpec {
    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    /// Bin containing `v`; values outside the edges go to the nearest bin.
    pub fn bin_of(&self, v: f64) -> usize {
        let k = self.edges.partition_point(|e| *e <= v);
        k.saturating_sub(1).min(self.n_bins() - 1)
    }

    pub fn midpoint(&self, bin: usize) -> f64 {
        0.5 * (self.edges[bin] + self.edges[bin + 1])
    }

    /// A single bin around one repeated value.
    fn single(v: f64) -> Self {
        Self {
            edges: vec![v - 0.5, v + 0.5],
            width: 1.0,
        }
    }
}

/// Freedman–Diaconis bins: width `2·IQR·n^(-1/3)`, edges stepping from the
/// minimum with the last edge clamped to the maximum.
pub fn fd_bin_spec(values: &[f64]) -> Result<BinSpec> {
    let n = values.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "Freedman–Diaconis binning needs at least 4 values, got {n}"
        )));
    }
    let sorted = stats::sorted_copy(values);
    let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
    if !(iqr > 0.0) {
        return Err(Error::Degenerate(
            "interquartile range is zero; cannot size bins".into(),
        ));
    }
    let lo = sorted[0];
    let hi = sorted[n - 1];
    let width = 2.0 * iqr / (n as f64).cbrt();
    let n_bins = (((hi - lo) / width).ceil() as usize).max(1);
    let mut edges: Vec<f64> = (0..n_bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    Ok(BinSpec { edges, width })
}

/// Index of the grid angle closest to `angle` on the circle.
pub fn nearest_angle_class(angle: f64, classes: &[f64]) -> usize {
    let mut best = 0;
    let mut best_err = f64::INFINITY;
    for (i, c) in classes.iter().enumerate() {
        let e = crate::eval::circular_error(angle, *c);
        if e < best_err {
            best = i;
            best_err = e;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub counts: CountVector,
    pub angle_label: usize,
    pub distance_label: usize,
    pub true_angle: f64,
    pub true_distance: f64,
    pub obstruction_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub n_detectors: usize,
    pub samples: Vec<Sample>,
    /// Degrees, indexed by `Sample::angle_label`.
    pub angle_classes: Vec<f64>,
    pub bin_spec: BinSpec,
    pub provenance: Option<ScenarioGrid>,
}

/// Which label a model is trained to predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Angle,
    Distance,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Angle => "angle",
            Target::Distance => "distance",
        }
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "angle" => Ok(Target::Angle),
            "distance" => Ok(Target::Distance),
            other => Err(Error::InvalidInput(format!("unknown target {other:?}"))),
        }
    }
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_angle_classes(&self) -> usize {
        self.angle_classes.len()
    }

    pub fn n_distance_bins(&self) -> usize {
        self.bin_spec.n_bins()
    }

    /// Raw count matrix, one row per sample.
    pub fn features(&self) -> Array2<f64> {
        let data: Vec<f64> = self
            .samples
            .iter()
            .flat_map(|s| s.counts.iter().copied())
            .collect();
        Array2::from_shape_vec((self.len(), self.n_detectors), data)
            .expect("every sample has n_detectors counts")
    }

    pub fn labels(&self, target: Target) -> Vec<usize> {
        self.samples
            .iter()
            .map(|s| match target {
                Target::Angle => s.angle_label,
                Target::Distance => s.distance_label,
            })
            .collect()
    }

    pub fn n_classes(&self, target: Target) -> usize {
        match target {
            Target::Angle => self.n_angle_classes(),
            Target::Distance => self.n_distance_bins(),
        }
    }

    /// Numeric value each class stands for: degrees for angle classes, bin
    /// midpoints in meters for distance bins.
    pub fn class_values(&self, target: Target) -> Vec<f64> {
        match target {
            Target::Angle => self.angle_classes.clone(),
            Target::Distance => (0..self.n_distance_bins())
                .map(|b| self.bin_spec.midpoint(b))
                .collect(),
        }
    }

    /// A dataset with the same label spaces holding `samples`.
    pub fn with_samples(&self, samples: Vec<Sample>) -> Dataset {
        Dataset {
            n_detectors: self.n_detectors,
            samples,
            angle_classes: self.angle_classes.clone(),
            bin_spec: self.bin_spec.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Samples whose true distance equals `d`.
    pub fn at_distance(&self, d: f64) -> Dataset {
        self.with_samples(
            self.samples
                .iter()
                .filter(|s| s.true_distance == d)
                .cloned()
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.samples.iter().enumerate() {
            if s.counts.len() != self.n_detectors {
                return Err(Error::DimensionMismatch {
                    expected: self.n_detectors,
                    got: s.counts.len(),
                });
            }
            if s.angle_label >= self.n_angle_classes() {
                return Err(Error::Schema(format!(
                    "sample {i}: angle class {} out of range",
                    s.angle_label
                )));
            }
            if s.distance_label >= self.n_distance_bins() {
                return Err(Error::Schema(format!(
                    "sample {i}: distance bin {} out of range",
                    s.distance_label
                )));
            }
        }
        Ok(())
    }
}

/// Generates one sample per `(angle, distance, replicate)` cell.
///
/// The template supplies the array, source strength and acquisition; the
/// grid's obstruction policy replaces the template's obstructions. Sample
/// `i` draws all of its randomness from streams derived from
/// `(grid.seed, i)`, so the result does not depend on thread count.
pub fn generate(grid: &ScenarioGrid, template: &Scene) -> Result<Dataset> {
    grid.validate()?;
    let cells: Vec<(usize, f64, f64)> = grid
        .angles
        .iter()
        .enumerate()
        .flat_map(|(ai, &a)| {
            grid.distances
                .iter()
                .flat_map(move |&d| (0..grid.replicates).map(move |_| (ai, a, d)))
        })
        .collect();

    let samples = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(ai, angle, distance))| {
            let (obstructions, obstruction_id) = match &grid.obstruction_policy {
                ObstructionPolicy::None => (vec![], None),
                ObstructionPolicy::Fixed(list) => (list.clone(), None),
                ObstructionPolicy::Moving(cands) => {
                    let mut r = rng::stream(grid.seed, &[tag::OBSTRUCTION, i as u64]);
                    let k = r.random_range(0..cands.len());
                    (vec![cands[k]], Some(k))
                }
            };
            let mut scene = template.with_pose(SourcePose::new(distance, angle));
            scene.obstructions = obstructions;
            let sample_seed = rng::derive(grid.seed, &[tag::SAMPLE, i as u64]);
            let counts = match grid.transport_mode {
                TransportMode::Expected => expected_counts(&scene)?,
                TransportMode::Poisson => sample_counts(&expected_counts(&scene)?, sample_seed)?,
                TransportMode::MonteCarlo { n_photons } => {
                    mc_counts(&scene, n_photons, sample_seed)?
                }
            };
            Ok(Sample {
                counts,
                angle_label: ai,
                distance_label: 0,
                true_angle: scene.source.pose.angle_theta,
                true_distance: distance,
                obstruction_id,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let distances: Vec<f64> = samples.iter().map(|s| s.true_distance).collect();
    let bin_spec = match fd_bin_spec(&distances) {
        Ok(b) => b,
        Err(Error::Degenerate(_)) | Err(Error::InvalidInput(_)) => BinSpec::single(distances[0]),
        Err(e) => return Err(e),
    };
    let samples = samples
        .into_iter()
        .map(|mut s| {
            s.distance_label = bin_spec.bin_of(s.true_distance);
            s
        })
        .collect();

    Ok(Dataset {
        n_detectors: template.array.len(),
        samples,
        angle_classes: grid.angles.clone(),
        bin_spec,
        provenance: Some(grid.clone()),
    })
}

/// Stratified train/test partition by angle class.
///
/// The test share is allocated across classes by largest remainder so the
/// total matches `round(test_fraction · n)`, with every present class
/// keeping at least one sample on each side. Both parts keep the original
/// sample order.
pub fn split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_angle_classes()];
    for (i, s) in ds.samples.iter().enumerate() {
        by_class[s.angle_label].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.len() == 1 {
            return Err(Error::InvalidInput(format!(
                "angle class {c} has a single sample; cannot stratify"
            )));
        }
    }
    let present: Vec<usize> = (0..by_class.len())
        .filter(|&c| !by_class[c].is_empty())
        .collect();

    // largest-remainder allocation of the test share
    let target_total = (test_fraction * ds.len() as f64).round() as usize;
    let mut alloc: Vec<usize> = vec![0; by_class.len()];
    let mut remainders: Vec<(f64, usize)> = Vec::new();
    for &c in &present {
        let exact = test_fraction * by_class[c].len() as f64;
        alloc[c] = exact.floor() as usize;
        remainders.push((exact - exact.floor(), c));
    }
    let mut assigned: usize = alloc.iter().sum();
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in remainders.iter().cycle().take(remainders.len() * 2) {
        if assigned >= target_total {
            break;
        }
        if alloc[c] + 1 < by_class[c].len() {
            alloc[c] += 1;
            assigned += 1;
        }
    }
    for &c in &present {
        alloc[c] = alloc[c].clamp(1, by_class[c].len() - 1);
    }

    let mut is_test = vec![false; ds.len()];
    for &c in &present {
        let mut members = by_class[c].clone();
        let mut r = rng::stream(seed, &[tag::SPLIT, c as u64]);
        // Fisher–Yates
        for i in (1..members.len()).rev() {
            let j = r.random_range(0..=i);
            members.swap(i, j);
        }
        for &m in &members[..alloc[c]] {
            is_test[m] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (s, t) in ds.samples.iter().zip(is_test) {
        if t {
            test.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    Ok((ds.with_samples(train), ds.with_samples(test)))
}
