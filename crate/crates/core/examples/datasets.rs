//! Building labeled datasets from presets: grid expansion, distance binning,
//! the train/test split and the CSV format.
//!
//! Run with `cargo run --release --example datasets`.

use radloc::datasets::{
    generate, preset, preset_names, read_csv_from, split, write_csv_to, Target,
};

fn main() -> radloc::Result<()> {
    println!("presets: {}", preset_names().join(", "));

    let p = preset("S1-small")?;
    println!(
        "S1-small: {} angles x {} distances x {} replicates, {:?}",
        p.grid.angles.len(),
        p.grid.distances.len(),
        p.grid.replicates,
        p.grid.transport_mode
    );
    let ds = generate(&p.grid, &p.scene)?;
    println!(
        "{} samples, {} angle classes, {} distance bins (width {:.3} m)",
        ds.len(),
        ds.n_classes(Target::Angle),
        ds.n_distance_bins(),
        ds.bin_spec.width
    );

    let (train, test) = split(&ds, 0.2, 42)?;
    println!("split: {} train / {} test", train.len(), test.len());

    let s = &ds.samples[0];
    println!(
        "first sample: {:.1} m at {:.0}°, bin {}, counts {:?}",
        s.true_distance, s.true_angle, s.distance_label, s.counts.0
    );

    let mut buf = Vec::new();
    write_csv_to(&test, &mut buf, &[])?;
    let back = read_csv_from(buf.as_slice())?;
    assert_eq!(back.samples, test.samples);
    println!(
        "CSV round trip of the test split: {} bytes, lossless",
        buf.len()
    );

    let lab = preset("L1-small")?;
    let lds = generate(&lab.grid, &lab.scene)?;
    println!(
        "L1-small: {} samples from a {}-detector array",
        lds.len(),
        lds.n_detectors
    );
    Ok(())
}
