use serde::{Deserialize, Serialize};

use super::{linspace, stepped, ObstructionPolicy, ScenarioGrid, TransportMode};
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, DetectorModel, Obstruction, Point2, SourcePose};
use crate::transport::{AcquisitionSpec, Scene, SourceSpec};

/// Linear attenuation coefficient of concrete, 1/m.
///
/// Chosen so that 0.10 m in front of a 1 µCi source attenuates as much as
/// 1.50 m in front of a 1 Ci source: `exp(-0.1 μ)·1e-6 = exp(-1.5 μ)`.
pub const MU_CONCRETE: f64 = 9.868_221_827_117_338; // ln(1e6) / 1.40

/// A named scenario: the grid plus the scene template it is applied to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub grid: ScenarioGrid,
    pub scene: Scene,
}

const NAMES: [&str; 10] = [
    "S1", "S1-small", "S2", "S2-small", "S3", "S3-small", "L1", "L1-small", "L2", "L2-small",
];

pub fn preset_names() -> &'static [&'static str] {
    &NAMES
}

fn template(n_detectors: usize, activity_ci: f64, live_time: f64) -> Scene {
    Scene {
        array: ArrayGeometry::ring(
            n_detectors,
            ArrayGeometry::DEFAULT_RING_RADIUS,
            DetectorModel::default(),
        )
        .expect("default ring is valid"),
        source: SourceSpec::new(activity_ci, SourcePose::new(1.0, 0.0)),
        obstructions: vec![],
        acquisition: AcquisitionSpec {
            live_time,
            ..AcquisitionSpec::default()
        },
    }
}

/// Ten 0.5 m × 2 m concrete blocks spread over the first quadrant, 3 m out.
fn moving_candidates() -> Vec<Obstruction> {
    (0..10)
        .map(|k| {
            let c = Point2::new(3.0, 0.0).rotated(4.5 + 9.0 * k as f64);
            Obstruction::new(c, 0.5, 2.0, MU_CONCRETE)
        })
        .collect()
}

/// Built-in scenario by name (`S1`, `S1-small`, ..., `L2`).
///
/// Simulated presets use an 8-detector ring, a 10 µCi Co-60 source and 14 s
/// acquisitions; laboratory-style presets use 4 detectors, 1 µCi and 300 s.
pub fn preset(name: &str) -> Result<Preset> {
    let (base, small) = match name.strip_suffix("-small") {
        Some(b) => (b, true),
        None => (name, false),
    };
    let seed = 7;
    let (grid, scene) = match base {
        "S1" | "S2" | "S3" => {
            let quadrant = base == "S3";
            let (angles, distances, replicates) = match (quadrant, small) {
                (false, false) => (stepped(0.0, 359.0, 1.0), linspace(1.0, 15.0, 200), 1),
                (true, false) => (stepped(0.0, 89.0, 1.0), linspace(1.0, 15.0, 300), 1),
                (false, true) => (stepped(0.0, 355.0, 5.0), stepped(1.0, 15.0, 0.5), 5),
                (true, true) => (stepped(0.0, 90.0, 5.0), stepped(1.0, 15.0, 0.5), 5),
            };
            let policy = match base {
                "S1" => ObstructionPolicy::None,
                "S2" => ObstructionPolicy::Fixed(vec![Obstruction::new(
                    Point2::new(4.0, 0.0),
                    1.0,
                    2.0,
                    MU_CONCRETE,
                )]),
                _ => ObstructionPolicy::Moving(moving_candidates()),
            };
            (
                ScenarioGrid {
                    angles,
                    distances,
                    obstruction_policy: policy,
                    replicates,
                    transport_mode: TransportMode::Poisson,
                    seed,
                },
                template(8, 10e-6, 14.0),
            )
        }
        "L1" | "L2" => {
            let policy = if base == "L1" {
                ObstructionPolicy::None
            } else {
                ObstructionPolicy::Fixed(vec![Obstruction::new(
                    Point2::new(1.5, 0.5),
                    0.5,
                    2.0,
                    MU_CONCRETE,
                )])
            };
            (
                ScenarioGrid {
                    angles: stepped(0.0, 90.0, 15.0),
                    distances: stepped(0.5, 3.0, 0.5),
                    obstruction_policy: policy,
                    replicates: 3,
                    transport_mode: TransportMode::Poisson,
                    seed,
                },
                template(4, 1e-6, 300.0),
            )
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "unknown preset {name:?}; expected one of {}",
                NAMES.join(", ")
            )))
        }
    };
    Ok(Preset {
        name: name.to_string(),
        grid,
        scene,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn concrete_equivalence_constant() {
        assert_relative_eq!(MU_CONCRETE, 1e6f64.ln() / 1.40, max_relative = 1e-15);
    }

    #[test]
    fn preset_sizes() {
        assert_eq!(preset("S1").unwrap().grid.len(), 72_000);
        assert_eq!(preset("S2").unwrap().grid.len(), 72_000);
        assert_eq!(preset("S3").unwrap().grid.len(), 27_000);
        assert_eq!(preset("S1-small").unwrap().grid.len(), 10_440);
        assert_eq!(preset("L1").unwrap().grid.len(), 126);
        assert!(preset("S9").is_err());
        for n in preset_names() {
            preset(n).unwrap().scene.validate().unwrap();
        }
    }

    #[test]
    fn moving_candidates_clear_the_array() {
        let s = preset("S3-small").unwrap();
        if let ObstructionPolicy::Moving(c) = &s.grid.obstruction_policy {
            assert_eq!(c.len(), 10);
            for o in c {
                assert!(o.center.distance(&Point2::ORIGIN) > 1.5);
            }
        } else {
            panic!("S3 must use a moving obstruction");
        }
    }
}
