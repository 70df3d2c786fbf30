//! Feature pipelines. Unit-norm divides each count vector by its L2 norm, so
//! only the *shape* of the response survives; robust scaling centers each
//! detector on its training median and divides by the interquartile range.
//!
//! Run with `cargo run --release --example scaling`.

use radloc::datasets::{generate, preset, split};
use radloc::geometry::SourcePose;
use radloc::scaling::{
    fit_robust, transform_robust, unit_norm, NormSpec, ScalerKind, ScalerParams,
};
use radloc::transport::expected_counts;

fn main() -> radloc::Result<()> {
    let scene = preset("S1-small")?.scene;
    let near = expected_counts(&scene.with_pose(SourcePose::new(1.0, 45.0)))?;
    let far = expected_counts(&scene.with_pose(SourcePose::new(2.0, 45.0)))?;
    let l2 = NormSpec::default();
    println!("same bearing, 1 m vs 2 m:");
    println!("  raw       {:?}", round(&near.0));
    println!("            {:?}", round(&far.0));
    println!("  unit-norm {:?}", round(&unit_norm(&near.0, l2)?));
    println!("            {:?}", round(&unit_norm(&far.0, l2)?));

    let p = preset("S1-small")?;
    let (train, test) = split(&generate(&p.grid, &p.scene)?, 0.2, 42)?;
    let robust = fit_robust(&train.features())?;
    println!("\nrobust fit on {} training rows", train.len());
    println!("  median {:?}", round(&robust.medians));
    println!("  IQR    {:?}", round(&robust.scales));
    println!(
        "  first test row -> {:?}",
        round(&transform_robust(&robust, &test.samples[0].counts.0)?)
    );

    // The same three pipelines as the models use, behind one interface.
    for kind in ScalerKind::ALL {
        let fitted = ScalerParams::fit(kind, &train.features())?;
        let x = fitted.transform_matrix(&test.features())?;
        println!(
            "{kind:>9}: test matrix {:?}, first row {:?}",
            x.dim(),
            round(&x.row(0).to_vec())
        );
    }
    Ok(())
}

fn round(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1000.0).round() / 1000.0).collect()
}
