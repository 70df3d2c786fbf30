//! Every classifier family on the same data, through the common training
//! pipeline (fit scaler -> transform -> fit model).
//!
//! Run with `cargo run --release --example train_models`.

use std::time::Instant;

use radloc::datasets::{generate, preset, split, Target};
use radloc::models::{train, ModelConfig, ModelKind};
use radloc::scaling::ScalerKind;

fn main() -> radloc::Result<()> {
    let p = preset("S1-small")?;
    let (tr, te) = split(&generate(&p.grid, &p.scene)?, 0.2, 42)?;
    println!(
        "{} training / {} test samples, unit-norm features\n",
        tr.len(),
        te.len()
    );

    for kind in ModelKind::ALL {
        let mut cfg = ModelConfig::new(kind);
        cfg.mlp.epochs = 100; // keeps the walkthrough quick; the default is 300
        let t = Instant::now();
        let model = train(&cfg, ScalerKind::UnitNorm, &tr, Target::Angle)?;
        let elapsed = t.elapsed();
        let correct = te
            .samples
            .iter()
            .filter(|s| model.predict(&s.counts.0).unwrap() == s.angle_label)
            .count();
        print!(
            "{kind:>7}: test accuracy {:.3}  ({:.2?})",
            correct as f64 / te.len() as f64,
            elapsed
        );
        if let Some(h) = model.fitted.loss_history() {
            print!("  loss {:.3} -> {:.3}", h[0], h[h.len() - 1]);
        }
        println!();
    }

    // Hyperparameters come from a config with defaults, e.g. from TOML.
    let cfg: ModelConfig = toml::from_str("kind = \"knn\"\nseed = 1\n[knn]\nk = 9").unwrap();
    let knn9 = train(&cfg, ScalerKind::UnitNorm, &tr, Target::Distance)?;
    let s = &te.samples[0];
    println!(
        "\nknn (k=9) distance for a sample at {:.1} m: {:.2} m (bin midpoint)",
        s.true_distance,
        knn9.predict_value(&s.counts.0)?
    );
    Ok(())
}
