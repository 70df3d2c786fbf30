//! The calibrated reference-table baseline: record the mean array response at
//! each calibration angle from a fixed distance, then answer a query with the
//! angle of the nearest row.
//!
//! Run with `cargo run --release --example reference_table`.

use radloc::datasets::{preset, stepped};
use radloc::geometry::SourcePose;
use radloc::reftable::{calibrate, CalibrationSpec, QueryMode};
use radloc::transport::{expected_counts, sample_counts};

fn main() -> radloc::Result<()> {
    let scene = preset("S1-small")?.scene;
    let table = calibrate(&scene, &CalibrationSpec::new(stepped(0.0, 355.0, 5.0)))?;
    println!(
        "{} rows measured at {} m ({} replicates each)",
        table.calib_angles.len(),
        table.calib_distance,
        CalibrationSpec::DEFAULT_REPLICATES
    );

    // Raw lookup works at the calibration distance and degrades away from it,
    // because the overall count level no longer matches any row.
    println!("\n  dist  true   raw  normalized");
    for (i, d) in [1.0, 2.0, 5.0, 10.0].into_iter().enumerate() {
        let truth = 100.0;
        let lambda = expected_counts(&scene.with_pose(SourcePose::new(d, truth)))?;
        let x = sample_counts(&lambda, i as u64)?.0;
        println!(
            "  {d:>4}  {truth:>4}  {:>4}  {:>10}",
            table.predict_angle_with(&x, QueryMode::Raw)?,
            table.predict_angle_with(&x, QueryMode::Normalized)?
        );
    }

    let json = table.to_container(None).to_json()?;
    println!(
        "\ncontainer: {} bytes of JSON, kind \"reference_table\"",
        json.len()
    );
    Ok(())
}
