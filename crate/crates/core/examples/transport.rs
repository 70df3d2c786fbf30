//! The three forward models for one acquisition: analytic expected counts,
//! Poisson draws around them, and Monte Carlo photon tracing.
//!
//! Run with `cargo run --release --example transport`.

use radloc::datasets::preset;
use radloc::geometry::SourcePose;
use radloc::transport::{expected_counts, mc_counts, sample_counts};

fn fmt(v: &[f64]) -> String {
    v.iter()
        .map(|c| format!("{c:>8.1}"))
        .collect::<Vec<_>>()
        .join("")
}

fn main() -> radloc::Result<()> {
    let template = preset("S1-small")?.scene;
    let scene = template.with_pose(SourcePose::new(3.0, 30.0));

    let lambda = expected_counts(&scene)?;
    let noisy = sample_counts(&lambda, 1)?;
    let mc = mc_counts(&scene, 2_000_000, 1)?;
    println!(
        "source 3 m at 30°, {} s live time",
        scene.acquisition.live_time
    );
    println!("expected {}", fmt(&lambda.0));
    println!("poisson  {}", fmt(&noisy.0));
    println!("mc       {}", fmt(&mc.0));

    // Without background the signal follows the inverse-square law.
    let mut quiet = template.clone();
    quiet.acquisition.background_rate = 0.0;
    println!("\nfront detector, no background:");
    for r in [1.0, 2.0, 4.0, 8.0] {
        let c = expected_counts(&quiet.with_pose(SourcePose::new(r, 0.0)))?;
        println!(
            "  r = {r:>3} m  counts {:>9.2}  counts·r² {:>9.2}",
            c.0[0],
            c.0[0] * r * r
        );
    }

    // Same seed, same draw: every stochastic step is keyed by (seed, path).
    assert_eq!(sample_counts(&lambda, 1)?, noisy);
    Ok(())
}
