//! The batch front end, driven in-process: simulate -> calibrate -> train ->
//! evaluate -> report, all in a scratch directory. The same commands work
//! from a shell with the `radloc` binary.
//!
//! Run with `cargo run --release --example cli_pipeline`.

use radloc::cli::run;

fn main() {
    let dir = std::env::temp_dir().join("radloc-example-cli");
    std::fs::create_dir_all(&dir).expect("scratch dir");
    let f = |name: &str| dir.join(name).to_string_lossy().into_owned();

    let config = f("run.toml");
    std::fs::write(
        &config,
        "scaler = \"unit-norm\"\n[grid]\npreset = \"S2-small\"\n[model]\nkind = \"knn\"\n",
    )
    .unwrap();

    let steps: Vec<Vec<String>> = vec![
        vec!["simulate".into(), "--out".into(), f("data.csv")],
        vec!["calibrate".into(), "--out".into(), f("table.json")],
        vec![
            "train".into(),
            "--data".into(),
            f("data.csv"),
            "--out".into(),
            f("knn.json"),
        ],
        vec![
            "evaluate".into(),
            "--data".into(),
            f("data.csv"),
            "--model".into(),
            f("knn.json"),
            "--table".into(),
            f("table.json"),
            "--out".into(),
            f("metrics.csv"),
        ],
        vec![
            "report".into(),
            "--metrics".into(),
            f("metrics.csv"),
            "--out".into(),
            f("report.csv"),
        ],
    ];
    for step in steps {
        let mut args = vec!["radloc".to_string(), "--config".into(), config.clone()];
        args.extend(step.iter().cloned());
        let code = run(&args);
        println!("radloc {:<9} -> exit {code}", step[0]);
        assert_eq!(code, 0);
    }

    let metrics = std::fs::read_to_string(f("metrics.csv")).unwrap();
    for line in metrics.lines().filter(|l| l.contains(",overall,")) {
        println!("  {line}");
    }

    // Errors map to exit codes: 1 usage, 2 schema/data, 3 numeric.
    let code = run([
        "radloc",
        "train",
        "--data",
        &f("knn.json"),
        "--out",
        &f("x.json"),
    ]);
    println!("training on a JSON file instead of a dataset -> exit {code}");
}
