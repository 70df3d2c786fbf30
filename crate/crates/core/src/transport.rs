//! Forward model: per-detector gamma counts for a scene.
//!
//! Three modes share one scene description:
//!
//! - [`expected_counts`]: the analytic mean `λ_d` (inverse-square flux,
//!   intrinsic efficiency, Beer–Lambert attenuation, flat background).
//! - [`sample_counts`]: independent Poisson draws around `λ`.
//! - [`mc_counts`]: photon-by-photon tracing of isotropic planar emission,
//!   rescaled onto the same physical scale as the analytic mode.

use std::f64::consts::PI;
use std::ops::Deref;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    attenuation_factor, optical_depth, polar_to_cartesian, ArrayGeometry, Obstruction, Point2,
    SourcePose,
};
use crate::rng::{self, tag};

/// Decays per second in one curie.
pub const BQ_PER_CURIE: f64 = 3.7e10;

/// Gamma photons emitted per Co-60 decay.
pub const CO60_PHOTONS_PER_DECAY: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    /// Activity in curies.
    pub activity: f64,
    pub photons_per_decay: f64,
    pub pose: SourcePose,
}

impl SourceSpec {
    /// A Co-60 source of `activity` curies.
    pub fn new(activity: f64, pose: SourcePose) -> Self {
        Self {
            activity,
            photons_per_decay: CO60_PHOTONS_PER_DECAY,
            pose,
        }
    }

    /// Photons emitted during `live_time` seconds.
    pub fn emitted_photons(&self, live_time: f64) -> f64 {
        self.activity * BQ_PER_CURIE * self.photons_per_decay * live_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    /// Seconds.
    pub live_time: f64,
    /// Counts per second per detector, scatter included.
    pub background_rate: f64,
}

impl Default for AcquisitionSpec {
    fn default() -> Self {
        Self {
            live_time: 14.0,
            background_rate: 5.0,
        }
    }
}

/// Everything a count vector is generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub array: ArrayGeometry,
    pub source: SourceSpec,
    pub obstructions: Vec<Obstruction>,
    pub acquisition: AcquisitionSpec,
}

impl Scene {
    pub fn source_position(&self) -> Point2 {
        polar_to_cartesian(self.source.pose)
    }

    /// Same scene with the source moved to `pose`.
    pub fn with_pose(&self, pose: SourcePose) -> Scene {
        let mut s = self.clone();
        s.source.pose = pose;
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        for o in &self.obstructions {
            o.validate()?;
        }
        let src = &self.source;
        if !(src.activity > 0.0) || !src.activity.is_finite() {
            return Err(Error::InvalidInput("source activity must be > 0".into()));
        }
        if !(src.photons_per_decay > 0.0) {
            return Err(Error::InvalidInput("photons per decay must be > 0".into()));
        }
        if !(src.pose.distance_r > 0.0) || !src.pose.distance_r.is_finite() {
            return Err(Error::InvalidInput("source distance must be > 0".into()));
        }
        let acq = &self.acquisition;
        if !(acq.live_time > 0.0) {
            return Err(Error::InvalidInput("live time must be > 0".into()));
        }
        if !(acq.background_rate >= 0.0) {
            return Err(Error::InvalidInput("background rate must be >= 0".into()));
        }
        let p = self.source_position();
        if let Some(i) = self.array.detectors.iter().position(|d| d.contains(&p)) {
            return Err(Error::SourceInsideDetector(i));
        }
        Ok(())
    }
}

/// Per-detector counts in detector index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountVector(pub Vec<f64>);

impl CountVector {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for CountVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for CountVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Fraction of isotropic 3-D emission captured by the face of detector `d`.
fn solid_angle_fraction(face_area: f64, r: f64) -> f64 {
    face_area / (4.0 * PI * r * r)
}

/// Analytic expected counts `λ_d`.
pub fn expected_counts(scene: &Scene) -> Result<CountVector> {
    scene.validate()?;
    let src = scene.source_position();
    let emitted = scene.source.emitted_photons(scene.acquisition.live_time);
    let background = scene.acquisition.background_rate * scene.acquisition.live_time;
    scene
        .array
        .detectors
        .iter()
        .enumerate()
        .map(|(d, det)| {
            let r = src.distance(&det.center);
            if r == 0.0 {
                return Err(Error::SourceInsideDetector(d));
            }
            let att = attenuation_factor(src, d, scene)?;
            let signal =
                emitted * solid_angle_fraction(det.face_area, r) * det.intrinsic_efficiency * att;
            Ok(signal + background)
        })
        .collect::<Result<Vec<_>>>()
        .map(CountVector)
}

fn poisson_draw<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    // λ is finite and positive here, so construction cannot fail.
    Poisson::new(lambda)
        .expect("finite positive Poisson mean")
        .sample(rng)
}

/// Independent Poisson draws around `lambda`, one stream per detector.
pub fn sample_counts(lambda: &CountVector, seed: u64) -> Result<CountVector> {
    lambda
        .iter()
        .enumerate()
        .map(|(d, &l)| {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "Poisson mean for detector {d} must be finite and >= 0, got {l}"
                )));
            }
            let mut rng = rng::stream(seed, &[tag::POISSON, d as u64]);
            Ok(poisson_draw(l, &mut rng))
        })
        .collect::<Result<Vec<_>>>()
        .map(CountVector)
}

/// Angular window (radians, centered on the detector bearing) subtended by a
/// detector disk as seen from the source.
#[derive(Debug, Clone, Copy)]
struct Window {
    start: f64,
    width: f64,
}

fn detector_windows(src: Point2, array: &ArrayGeometry) -> Vec<Window> {
    array
        .detectors
        .iter()
        .map(|det| {
            let dx = det.center.x - src.x;
            let dy = det.center.y - src.y;
            let dist = dx.hypot(dy);
            let half = (det.radius / dist).min(1.0).asin();
            let bearing = dy.atan2(dx);
            Window {
                start: (bearing - half).rem_euclid(2.0 * PI),
                width: 2.0 * half,
            }
        })
        .collect()
}

/// Union of circular intervals as disjoint `[start, end)` pieces on `[0, 2π)`.
fn merge_windows(windows: &[Window]) -> Vec<(f64, f64)> {
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for w in windows {
        let end = w.start + w.width;
        if end <= 2.0 * PI {
            pieces.push((w.start, end));
        } else {
            pieces.push((w.start, 2.0 * PI));
            pieces.push((0.0, end - 2.0 * PI));
        }
    }
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (s, e) in pieces {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    merged
}

/// Raw Monte Carlo hit tallies for `n_photons` isotropic planar emissions.
///
/// Only directions that can reach a detector are traced: the number of such
/// photons is drawn as `Binomial(n, covered / 2π)` and their bearings are
/// sampled uniformly inside the covered windows, which is equivalent to
/// tracing all `n` photons. A photon crossing detector `d` registers there
/// with probability `ε_d · exp(-τ)`, where `τ` is the optical depth from the
/// source to the middle of its chord through `d`.
pub fn mc_hits(scene: &Scene, n_photons: u64, seed: u64) -> Result<Vec<u64>> {
    if n_photons == 0 {
        return Err(Error::InvalidInput("n_photons must be > 0".into()));
    }
    scene.validate()?;
    let src = scene.source_position();
    let array = &scene.array;
    let merged = merge_windows(&detector_windows(src, array));
    let covered: f64 = merged.iter().map(|(s, e)| e - s).sum();
    let mut rng = rng::stream(seed, &[tag::MONTE_CARLO]);
    let p_cover = (covered / (2.0 * PI)).min(1.0);
    let n_traced = Binomial::new(n_photons, p_cover)
        .map_err(|e| Error::Numeric(format!("binomial setup: {e}")))?
        .sample(&mut rng);

    let mut hits = vec![0u64; array.len()];
    for _ in 0..n_traced {
        let mut u = rng.random::<f64>() * covered;
        let mut phi = merged[merged.len() - 1].1;
        for &(s, e) in &merged {
            if u < e - s {
                phi = s + u;
                break;
            }
            u -= e - s;
        }
        let (dy, dx) = phi.sin_cos();
        for (d, det) in array.detectors.iter().enumerate() {
            let fx = det.center.x - src.x;
            let fy = det.center.y - src.y;
            let along = fx * dx + fy * dy;
            if along <= 0.0 {
                continue;
            }
            let perp2 = fx * fx + fy * fy - along * along;
            if perp2 >= det.radius * det.radius {
                continue;
            }
            let mid = Point2::new(src.x + along * dx, src.y + along * dy);
            let depth = optical_depth(src, mid, array, &scene.obstructions, Some(d));
            let p = det.intrinsic_efficiency * (-depth).exp();
            if rng.random::<f64>() < p {
                hits[d] += 1;
            }
        }
    }
    Ok(hits)
}

/// Per-detector factor mapping planar MC hit fractions onto the analytic
/// 3-D flux scale, for the unobstructed version of `scene`.
///
/// A disk of radius `a` at distance `r` intercepts `asin(a/r)/π` of planar
/// emission but `A/(4πr²)` of spherical emission; the ratio converts one to
/// the other.
pub fn planar_to_flux_scale(scene: &Scene) -> Vec<f64> {
    let src = scene.source_position();
    scene
        .array
        .detectors
        .iter()
        .map(|det| {
            let r = src.distance(&det.center);
            let planar = (det.radius / r).min(1.0).asin() / PI;
            solid_angle_fraction(det.face_area, r) / planar
        })
        .collect()
}

/// Monte Carlo counts on the physical scale, background included.
pub fn mc_counts(scene: &Scene, n_photons: u64, seed: u64) -> Result<CountVector> {
    let hits = mc_hits(scene, n_photons, seed)?;
    let scale = planar_to_flux_scale(scene);
    let emitted = scene.source.emitted_photons(scene.acquisition.live_time);
    let per_photon = emitted / n_photons as f64;
    let background = scene.acquisition.background_rate * scene.acquisition.live_time;
    Ok(CountVector(
        hits.iter()
            .zip(&scale)
            .enumerate()
            .map(|(d, (&h, &k))| {
                let mut rng = rng::stream(seed, &[tag::BACKGROUND, d as u64]);
                (h as f64 * per_photon * k).round() + poisson_draw(background, &mut rng)
            })
            .collect(),
    ))
}
