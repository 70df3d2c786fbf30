//! Path lengths and Beer–Lambert attenuation in the array plane.
//!
//! Run with `cargo run --example geometry`.

use radloc::datasets::{preset, MU_CONCRETE};
use radloc::geometry::{
    attenuation_factor, optical_depth, polar_to_cartesian, segment_circle_chord_length,
    segment_rect_length, Obstruction, Point2, SourcePose,
};

fn main() -> radloc::Result<()> {
    // A ray straight through the middle of a unit circle crosses its diameter.
    let chord = segment_circle_chord_length(
        Point2::new(-3.0, 0.0),
        Point2::new(3.0, 0.0),
        Point2::ORIGIN,
        1.0,
    );
    println!("chord through unit circle: {chord:.3} m");

    let wall = Obstruction::new(Point2::new(3.0, 0.0), 0.5, 2.0, MU_CONCRETE);
    let through = segment_rect_length(Point2::new(5.0, 0.0), Point2::ORIGIN, &wall);
    println!(
        "path through a 0.5 m concrete wall: {through:.3} m -> survival {:.2e}",
        (-MU_CONCRETE * through).exp()
    );

    // The front detector of the default ring shadows the detectors behind it.
    let p = preset("S1-small")?;
    let mut scene = p.scene.with_pose(SourcePose::new(2.0, 0.0));
    let src = polar_to_cartesian(scene.source.pose);
    println!("\nsource at {src:?}; per-detector attenuation, no obstructions:");
    for i in 0..scene.array.len() {
        let det = scene.array.detectors[i];
        let tau = optical_depth(src, det.center, &scene.array, &[], Some(i));
        println!(
            "  detector {i} at {:>5.1}°: tau {tau:.3}, factor {:.3}",
            scene.array.detector_angle(i),
            attenuation_factor(src, i, &scene)?
        );
    }

    scene.obstructions.push(Obstruction::new(
        Point2::new(1.0, 0.0),
        0.3,
        1.0,
        MU_CONCRETE,
    ));
    println!("\nwith a concrete block between source and array:");
    for i in 0..scene.array.len() {
        println!(
            "  detector {i}: factor {:.2e}",
            attenuation_factor(src, i, &scene)?
        );
    }
    Ok(())
}
