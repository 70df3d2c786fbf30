//! Metrics with confidence intervals, per-distance breakdowns and the flat
//! metrics CSV that `radloc report` pivots.
//!
//! Run with `cargo run --release --example evaluate`.

use radloc::datasets::{generate, preset, split, Target};
use radloc::eval::{
    accuracy_by_distance, evaluate, metrics_rows, write_metrics_csv, CiMethod, EvalOptions,
    Predictor,
};
use radloc::models::{train, ModelConfig, ModelKind};
use radloc::scaling::ScalerKind;

fn main() -> radloc::Result<()> {
    let p = preset("S1-small")?;
    let (tr, te) = split(&generate(&p.grid, &p.scene)?, 0.2, 42)?;
    let cfg = ModelConfig::new(ModelKind::Knn);
    let angle = train(&cfg, ScalerKind::UnitNorm, &tr, Target::Angle)?;
    let dist = train(&cfg, ScalerKind::Robust, &tr, Target::Distance)?;

    let normal = EvalOptions::default();
    let boot = EvalOptions {
        ci: CiMethod::Bootstrap {
            resamples: 1000,
            seed: 42,
        },
        ..EvalOptions::default()
    };
    let m = evaluate(Predictor::Model(&angle), &te, &normal)?;
    let mb = evaluate(Predictor::Model(&angle), &te, &boot)?;
    let e = m.mean_angular_error.unwrap();
    println!(
        "angle: accuracy {:.3}, mean error {:.2}° ± {:.2} (normal) / ± {:.2} (bootstrap)",
        m.angle_accuracy.unwrap(),
        e.mean,
        e.ci95,
        mb.mean_angular_error.unwrap().ci95
    );

    let d = evaluate(Predictor::Model(&dist), &te, &normal)?;
    let rel = d.mean_relative_distance_error.unwrap();
    println!(
        "distance: bin accuracy {:.3}, relative error {:.1}% ± {:.1} (median {:.1}%)",
        d.distance_bin_accuracy.unwrap(),
        rel.mean,
        rel.ci95,
        d.median_relative_distance_error.unwrap()
    );

    println!("\nper distance (angle model):");
    for row in m.per_distance.iter().step_by(4) {
        println!(
            "  {:>4.1} m  n={:>3}  accuracy {:.3}  error {:>6.2}°",
            row.distance,
            row.n,
            row.angle_accuracy.unwrap(),
            row.mean_angular_error.unwrap()
        );
    }

    let mut rows = metrics_rows(&m, "knn", "unit-norm", "S1-small");
    rows.extend(metrics_rows(&d, "knn", "robust", "S1-small"));
    let mut csv = Vec::new();
    write_metrics_csv(&rows, &mut csv, &["example output".to_string()])?;
    println!(
        "\nmetrics CSV: {} rows, header:\n  {}",
        rows.len(),
        String::from_utf8_lossy(&csv).lines().nth(1).unwrap()
    );

    let (series, table) = accuracy_by_distance(&rows);
    println!("pivot series: {series:?}, {} distances", table.len());
    Ok(())
}
