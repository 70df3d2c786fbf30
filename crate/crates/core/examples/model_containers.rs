//! Trained models persist as self-describing JSON containers. Loading one
//! restores exactly the predictions of the model that was saved.
//!
//! Run with `cargo run --release --example model_containers`.

use radloc::datasets::{generate, preset, split, Target};
use radloc::models::container::Container;
use radloc::models::{train, ModelConfig, ModelKind, TrainedModel};
use radloc::scaling::ScalerKind;

fn main() -> radloc::Result<()> {
    let p = preset("S2-small")?;
    let (tr, te) = split(&generate(&p.grid, &p.scene)?, 0.2, 42)?;
    let model = train(
        &ModelConfig::new(ModelKind::Dtree),
        ScalerKind::Robust,
        &tr,
        Target::Angle,
    )?;

    let dir = std::env::temp_dir().join("radloc-example-containers");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("dtree.json");
    model.save(&path)?;

    let c = Container::read(&path)?;
    println!(
        "{}: format_version {}, kind {}, target {:?}",
        path.display(),
        c.format_version,
        c.kind,
        c.target
    );
    println!("  scaler      {:?}", c.scaler.kind());
    println!("  classes     {} values", c.classes.len());
    println!("  n_features  {}", c.n_features);
    println!("  hyperparams {}", c.hyperparameters);

    let back = TrainedModel::load(&path)?;
    let same = te
        .samples
        .iter()
        .all(|s| back.predict(&s.counts.0).unwrap() == model.predict(&s.counts.0).unwrap());
    println!(
        "reloaded model agrees on all {} test samples: {same}",
        te.len()
    );

    // A container of the wrong kind is rejected rather than misread.
    let table = radloc::reftable::calibrate(
        &p.scene,
        &radloc::reftable::CalibrationSpec::new(p.grid.angles.clone()),
    )?;
    let err = TrainedModel::from_container(&table.to_container(None)).unwrap_err();
    println!("loading a reference table as a model: {err}");
    Ok(())
}
