//! Planar scene description and segment/shape path lengths.
//!
//! Everything lives in the horizontal plane of the array: detectors are
//! disks, obstructions are axis-aligned rectangles, and the source sits at
//! a polar position around the array center. Path lengths through these
//! shapes feed the Beer–Lambert attenuation used by [`crate::transport`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::Scene;

/// A point in the array plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Rotates the point counterclockwise about the origin.
    pub fn rotated(&self, degrees: f64) -> Point2 {
        let (s, c) = degrees.to_radians().sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

/// One detector of the array, seen as a disk in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub center: Point2,
    /// Radius of the circular cross-section, meters.
    pub radius: f64,
    /// Probability that an incident photon registers a count.
    pub intrinsic_efficiency: f64,
    /// Effective cross-section presented to the incoming flux, m².
    pub face_area: f64,
    /// Linear attenuation coefficient of the crystal, 1/m. Applied when this
    /// detector sits between the source and another detector.
    pub mu_self: f64,
}

impl DetectorSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(Error::InvalidInput("detector center must be finite".into()));
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidInput("detector radius must be > 0".into()));
        }
        if !(self.intrinsic_efficiency > 0.0 && self.intrinsic_efficiency <= 1.0) {
            return Err(Error::InvalidInput(
                "intrinsic efficiency must lie in (0, 1]".into(),
            ));
        }
        if !(self.face_area > 0.0) {
            return Err(Error::InvalidInput("detector face area must be > 0".into()));
        }
        if !(self.mu_self >= 0.0) {
            return Err(Error::InvalidInput("detector mu_self must be >= 0".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point2) -> bool {
        self.center.distance(p) <= self.radius
    }
}

/// Detectors evenly spaced on a ring around the origin.
///
/// Detector `i` sits at angle `i * 360 / n` degrees; that index order is the
/// feature order of every count vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub detectors: Vec<DetectorSpec>,
    pub ring_radius: f64,
}

/// Physical properties shared by every detector of a ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub radius: f64,
    pub intrinsic_efficiency: f64,
    pub face_area: f64,
    pub mu_self: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            radius: 0.04,
            intrinsic_efficiency: 0.3,
            face_area: 2e-2,
            mu_self: 50.0,
        }
    }
}

impl ArrayGeometry {
    pub const DEFAULT_RING_RADIUS: f64 = 0.15;

    /// Builds `n` identical detectors on a ring of radius `ring_radius`.
    pub fn ring(n: usize, ring_radius: f64, model: DetectorModel) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "an array needs at least 2 detectors, got {n}"
            )));
        }
        if !(ring_radius > 0.0) {
            return Err(Error::InvalidInput("ring radius must be > 0".into()));
        }
        let detectors = (0..n)
            .map(|i| DetectorSpec {
                center: Point2::new(ring_radius, 0.0).rotated(i as f64 * 360.0 / n as f64),
                radius: model.radius,
                intrinsic_efficiency: model.intrinsic_efficiency,
                face_area: model.face_area,
                mu_self: model.mu_self,
            })
            .collect();
        let array = Self {
            detectors,
            ring_radius,
        };
        array.validate()?;
        Ok(array)
    }

    pub fn len(&self) -> usize {
        self.detectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detectors.is_empty()
    }

    /// Angular position of detector `i` on the ring, degrees.
    pub fn detector_angle(&self, i: usize) -> f64 {
        360.0 * i as f64 / self.len() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.detectors.len() < 2 {
            return Err(Error::InvalidInput(
                "an array needs at least 2 detectors".into(),
            ));
        }
        for d in &self.detectors {
            d.validate()?;
        }
        for (i, a) in self.detectors.iter().enumerate() {
            for b in &self.detectors[i + 1..] {
                if a.center.distance(&b.center) < a.radius + b.radius {
                    return Err(Error::InvalidInput("detectors overlap".into()));
                }
            }
        }
        Ok(())
    }
}

/// An axis-aligned rectangular block of attenuating material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstruction {
    pub center: Point2,
    /// Extent along x, meters.
    pub width: f64,
    /// Extent along y, meters.
    pub height: f64,
    /// Linear attenuation coefficient, 1/m.
    pub mu: f64,
}

impl Obstruction {
    pub fn new(center: Point2, width: f64, height: f64, mu: f64) -> Self {
        Self {
            center,
            width,
            height,
            mu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() || !(self.width > 0.0) || !(self.height > 0.0) {
            return Err(Error::InvalidInput(
                "obstruction needs a finite center and positive extent".into(),
            ));
        }
        if !(self.mu >= 0.0) {
            return Err(Error::InvalidInput("obstruction mu must be >= 0".into()));
        }
        Ok(())
    }

    fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let hw = 0.5 * self.width;
        let hh = 0.5 * self.height;
        (
            [self.center.x - hw, self.center.y - hh],
            [self.center.x + hw, self.center.y + hh],
        )
    }
}

/// Polar source position relative to the array center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourcePose {
    /// Meters from the array center.
    pub distance_r: f64,
    /// Degrees, counterclockwise from +x.
    pub angle_theta: f64,
}

impl SourcePose {
    pub fn new(distance_r: f64, angle_theta: f64) -> Self {
        Self {
            distance_r,
            angle_theta: angle_theta.rem_euclid(360.0),
        }
    }
}

pub fn polar_to_cartesian(pose: SourcePose) -> Point2 {
    let (s, c) = pose.angle_theta.to_radians().sin_cos();
    Point2::new(pose.distance_r * c, pose.distance_r * s)
}

/// Length of segment `ab` inside the closed disk of `radius` around `center`.
pub fn segment_circle_chord_length(a: Point2, b: Point2, center: Point2, radius: f64) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return 0.0;
    }
    let fx = a.x - center.x;
    let fy = a.y - center.y;
    // |f + t d|^2 = r^2  =>  len2 t^2 + 2 (f.d) t + |f|^2 - r^2 = 0
    let half_b = fx * dx + fy * dy;
    let c = fx * fx + fy * fy - radius * radius;
    let disc = half_b * half_b - len2 * c;
    if disc <= 0.0 {
        return 0.0;
    }
    let root = disc.sqrt();
    let t0 = ((-half_b - root) / len2).max(0.0);
    let t1 = ((-half_b + root) / len2).min(1.0);
    if t1 <= t0 {
        0.0
    } else {
        (t1 - t0) * len2.sqrt()
    }
}

/// Length of segment `ab` inside `rect`, by parametric slab clipping.
pub fn segment_rect_length(a: Point2, b: Point2, rect: &Obstruction) -> f64 {
    let d = [b.x - a.x, b.y - a.y];
    let len = d[0].hypot(d[1]);
    if len == 0.0 {
        return 0.0;
    }
    let p = [a.x, a.y];
    let (lo, hi) = rect.bounds();
    let mut t_enter = 0.0_f64;
    let mut t_exit = 1.0_f64;
    for axis in 0..2 {
        if d[axis] == 0.0 {
            if p[axis] < lo[axis] || p[axis] > hi[axis] {
                return 0.0;
            }
            continue;
        }
        let inv = 1.0 / d[axis];
        let mut t0 = (lo[axis] - p[axis]) * inv;
        let mut t1 = (hi[axis] - p[axis]) * inv;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
        if t_exit <= t_enter {
            return 0.0;
        }
    }
    (t_exit - t_enter) * len
}

/// Optical depth `Σ mu_j L_j` along segment `ab` through every obstruction
/// and every detector except `skip`.
pub fn optical_depth(
    a: Point2,
    b: Point2,
    array: &ArrayGeometry,
    obstructions: &[Obstruction],
    skip: Option<usize>,
) -> f64 {
    let mut depth = 0.0;
    for rect in obstructions {
        if rect.mu > 0.0 {
            let l = segment_rect_length(a, b, rect);
            if l > 0.0 {
                depth += rect.mu * l;
            }
        }
    }
    for (j, det) in array.detectors.iter().enumerate() {
        if Some(j) == skip || det.mu_self == 0.0 {
            continue;
        }
        let l = segment_circle_chord_length(a, b, det.center, det.radius);
        if l > 0.0 {
            depth += det.mu_self * l;
        }
    }
    depth
}

/// Beer–Lambert survival probability from `source` to the center of
/// detector `det_index`, through obstructions and the other detectors.
pub fn attenuation_factor(source: Point2, det_index: usize, scene: &Scene) -> Result<f64> {
    let array = &scene.array;
    let det = array.detectors.get(det_index).ok_or_else(|| {
        Error::InvalidInput(format!(
            "detector index {det_index} out of range for {} detectors",
            array.len()
        ))
    })?;
    if det.contains(&source) {
        return Err(Error::SourceInsideDetector(det_index));
    }
    let depth = optical_depth(
        source,
        det.center,
        array,
        &scene.obstructions,
        Some(det_index),
    );
    Ok((-depth).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{AcquisitionSpec, Scene, SourceSpec};
    use approx::assert_abs_diff_eq;

    fn unit_rect() -> Obstruction {
        Obstruction::new(Point2::ORIGIN, 2.0, 2.0, 1.0)
    }

    fn scene_with(obstructions: Vec<Obstruction>, mu_self: f64, pose: SourcePose) -> Scene {
        let model = DetectorModel {
            mu_self,
            ..DetectorModel::default()
        };
        Scene {
            array: ArrayGeometry::ring(8, 0.15, model).unwrap(),
            source: SourceSpec::new(1e-5, pose),
            obstructions,
            acquisition: AcquisitionSpec::default(),
        }
    }

    #[test]
    fn polar_axis_cases() {
        let p = polar_to_cartesian(SourcePose::new(1.0, 0.0));
        assert_abs_diff_eq!(p.x, 1.0);
        assert_abs_diff_eq!(p.y, 0.0);
        let p = polar_to_cartesian(SourcePose::new(2.0, 90.0));
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 2.0);
    }

    #[test]
    fn polar_off_axis() {
        let p = polar_to_cartesian(SourcePose::new(5.0, 37.0));
        assert_abs_diff_eq!(p.x, 3.9932, epsilon = 5e-5);
        assert_abs_diff_eq!(p.y, 3.0091, epsilon = 5e-5);
    }

    #[test]
    fn chord_cases() {
        let c = Point2::ORIGIN;
        let chord = |a: (f64, f64), b: (f64, f64)| {
            segment_circle_chord_length(Point2::new(a.0, a.1), Point2::new(b.0, b.1), c, 1.0)
        };
        assert_abs_diff_eq!(chord((-2.0, 0.0), (2.0, 0.0)), 2.0, epsilon = 1e-12);
        assert_eq!(chord((-2.0, 5.0), (2.0, 5.0)), 0.0);
        assert_abs_diff_eq!(chord((0.0, 0.0), (2.0, 0.0)), 1.0, epsilon = 1e-12);
        // segment ends before reaching the disk
        assert_eq!(chord((-5.0, 0.0), (-2.0, 0.0)), 0.0);
        // fully inside
        assert_abs_diff_eq!(chord((-0.5, 0.0), (0.5, 0.0)), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rect_cases() {
        let r = unit_rect();
        let len = |a: (f64, f64), b: (f64, f64)| {
            segment_rect_length(Point2::new(a.0, a.1), Point2::new(b.0, b.1), &r)
        };
        assert_abs_diff_eq!(len((-3.0, 0.0), (3.0, 0.0)), 2.0, epsilon = 1e-12);
        assert_eq!(len((-3.0, 5.0), (3.0, 5.0)), 0.0);
        assert_abs_diff_eq!(len((0.0, 0.0), (3.0, 0.0)), 1.0, epsilon = 1e-12);
        // diagonal through the corners
        assert_abs_diff_eq!(len((-2.0, -2.0), (2.0, 2.0)), 8f64.sqrt(), epsilon = 1e-12);
        // vertical segment outside the x slab
        assert_eq!(len((1.5, -3.0), (1.5, 3.0)), 0.0);
    }

    #[test]
    fn attenuation_empty_scene_is_one() {
        let scene = scene_with(vec![], 0.0, SourcePose::new(3.0, 10.0));
        let src = polar_to_cartesian(scene.source.pose);
        for d in 0..8 {
            assert_eq!(attenuation_factor(src, d, &scene).unwrap(), 1.0);
        }
    }

    #[test]
    fn attenuation_single_block() {
        // 0.10 m of concrete-like material at mu = 9.87 1/m
        let wall = Obstruction::new(Point2::new(1.0, 0.0), 0.10, 4.0, 9.87);
        let scene = scene_with(vec![wall], 0.0, SourcePose::new(3.0, 0.0));
        let src = polar_to_cartesian(scene.source.pose);
        let f = attenuation_factor(src, 0, &scene).unwrap();
        assert_abs_diff_eq!(f, (-0.987f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(f, 0.3727, epsilon = 1e-4);
    }

    #[test]
    fn attenuation_two_blocks_multiply() {
        let w1 = Obstruction::new(Point2::new(1.0, 0.0), 0.10, 4.0, 9.87);
        let w2 = Obstruction::new(Point2::new(2.0, 0.0), 0.20, 4.0, 3.0);
        let pose = SourcePose::new(3.0, 0.0);
        let both = scene_with(vec![w1, w2], 0.0, pose);
        let only1 = scene_with(vec![w1], 0.0, pose);
        let only2 = scene_with(vec![w2], 0.0, pose);
        let src = polar_to_cartesian(pose);
        let f = attenuation_factor(src, 0, &both).unwrap();
        let g = attenuation_factor(src, 0, &only1).unwrap()
            * attenuation_factor(src, 0, &only2).unwrap();
        assert_abs_diff_eq!(f, g, epsilon = 1e-14);
    }

    #[test]
    fn rear_detector_is_shadowed() {
        let scene = scene_with(vec![], 50.0, SourcePose::new(5.0, 0.0));
        let src = polar_to_cartesian(scene.source.pose);
        let front = attenuation_factor(src, 0, &scene).unwrap();
        let rear = attenuation_factor(src, 4, &scene).unwrap();
        assert_eq!(front, 1.0);
        assert!(rear < 0.05, "rear detector attenuation {rear}");
    }

    #[test]
    fn source_inside_detector_is_an_error() {
        let scene = scene_with(vec![], 0.0, SourcePose::new(0.15, 0.0));
        let src = polar_to_cartesian(scene.source.pose);
        assert!(matches!(
            attenuation_factor(src, 0, &scene),
            Err(Error::SourceInsideDetector(0))
        ));
    }

    #[test]
    fn ring_layout() {
        let array = ArrayGeometry::ring(4, 0.15, DetectorModel::default()).unwrap();
        assert_abs_diff_eq!(array.detectors[1].center.y, 0.15, epsilon = 1e-15);
        assert!(ArrayGeometry::ring(1, 0.15, DetectorModel::default()).is_err());
        // 8 detectors of radius 0.04 cannot fit on a 5 cm ring
        assert!(ArrayGeometry::ring(8, 0.05, DetectorModel::default()).is_err());
    }
}
