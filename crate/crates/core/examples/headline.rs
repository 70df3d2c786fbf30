//! The main comparisons on the small simulated presets:
//!
//! 1. direction: kNN on unit-normed counts against the 2 m reference table,
//!    distance by distance;
//! 2. distance: kNN distance-bin accuracy under each feature pipeline;
//! 3. obstruction: the quadrant grid with a moving concrete block against the
//!    same grid with nothing in the way.
//!
//! Run with `cargo run --release --example headline`.

use std::time::Instant;

use radloc::datasets::{generate, preset, split, stepped, ObstructionPolicy, Target};
use radloc::eval::{evaluate, EvalOptions, Predictor};
use radloc::models::{train, ModelConfig, ModelKind};
use radloc::reftable::{calibrate, CalibrationSpec, QueryMode};
use radloc::scaling::ScalerKind;

fn main() -> radloc::Result<()> {
    let t0 = Instant::now();
    let opts = EvalOptions::default();
    let knn = ModelConfig::new(ModelKind::Knn);

    let p = preset("S1-small")?;
    let (tr, te) = split(&generate(&p.grid, &p.scene)?, 0.2, 42)?;

    let table = calibrate(&p.scene, &CalibrationSpec::new(stepped(0.0, 355.0, 5.0)))?;
    let ref_m = evaluate(Predictor::Table(&table, QueryMode::Raw), &te, &opts)?;
    let model = train(&knn, ScalerKind::UnitNorm, &tr, Target::Angle)?;
    let knn_m = evaluate(Predictor::Model(&model), &te, &opts)?;
    println!(
        "direction: reference table {:.2}°, knn+unit-norm {:.2}°",
        ref_m.mean_angular_error.unwrap().mean,
        knn_m.mean_angular_error.unwrap().mean,
    );
    for (r, k) in ref_m.per_distance.iter().zip(&knn_m.per_distance) {
        let (re, ke) = (r.mean_angular_error.unwrap(), k.mean_angular_error.unwrap());
        println!(
            "  {:>4.1} m  reference {re:>6.2}  knn {ke:>6.2}{}",
            r.distance,
            if ke < re { "" } else { "   <- table wins" }
        );
    }

    println!(
        "\ndistance (chance {:.4}):",
        1.0 / te.n_distance_bins() as f64
    );
    for scaler in ScalerKind::ALL {
        let m = train(&knn, scaler, &tr, Target::Distance)?;
        let mm = evaluate(Predictor::Model(&m), &te, &opts)?;
        println!(
            "  {scaler:>9}: bin accuracy {:.3}, relative error {:.1}%",
            mm.distance_bin_accuracy.unwrap(),
            mm.mean_relative_distance_error.unwrap().mean
        );
    }

    let p3 = preset("S3-small")?;
    let mut clear = p3.grid.clone();
    clear.obstruction_policy = ObstructionPolicy::None;
    println!("\nobstruction:");
    for (name, grid) in [("moving block", &p3.grid), ("unobstructed", &clear)] {
        let (a, b) = split(&generate(grid, &p3.scene)?, 0.2, 42)?;
        let m = train(&knn, ScalerKind::UnitNorm, &a, Target::Angle)?;
        let mm = evaluate(Predictor::Model(&m), &b, &opts)?;
        println!(
            "  {name:>12}: angle accuracy {:.3}",
            mm.angle_accuracy.unwrap()
        );
    }
    println!("\ntotal {:.2?}", t0.elapsed());
    Ok(())
}
