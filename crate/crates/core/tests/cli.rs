use std::path::Path;
use std::process::{Command, Output};

fn radloc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radloc"))
        .current_dir(dir)
        .args(args)
        .env_remove("RADLOC_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = radloc(dir, args);
    assert!(
        out.status.success(),
        "radloc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

const CONFIG: &str = r#"
scaler = "robust"
[grid]
preset = "L1-small"
[model]
kind = "dtree"
"#;

#[test]
fn pipeline_writes_all_artifacts_with_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("run.toml"), CONFIG).unwrap();
    ok(
        d,
        &["--config", "run.toml", "simulate", "--out", "data.csv"],
    );
    ok(
        d,
        &["--config", "run.toml", "calibrate", "--out", "table.json"],
    );
    ok(
        d,
        &[
            "--config", "run.toml", "train", "--data", "data.csv", "--out", "m.json",
        ],
    );
    ok(
        d,
        &[
            "--config",
            "run.toml",
            "evaluate",
            "--data",
            "data.csv",
            "--model",
            "m.json",
            "--table",
            "table.json",
            "--out",
            "metrics.csv",
            "--json",
            "metrics.json",
        ],
    );
    ok(
        d,
        &["report", "--metrics", "metrics.csv", "--out", "report.csv"],
    );

    let data = std::fs::read_to_string(d.join("data.csv")).unwrap();
    assert!(data.lines().any(|l| l.starts_with("# provenance: ")));
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("m.json")).unwrap()).unwrap();
    assert_eq!(model["kind"], "dtree");
    assert_eq!(model["scaler"]["kind"], "robust");
    let prov = &model["provenance"];
    assert_eq!(prov["command"], "train");
    assert_eq!(prov["config"]["grid"]["preset"], "L1-small");
    assert_eq!(prov["inputs"]["data"].as_str().unwrap().len(), 64);

    let metrics = std::fs::read_to_string(d.join("metrics.csv")).unwrap();
    let overall: Vec<&str> = metrics
        .lines()
        .filter(|l| l.contains(",overall,"))
        .collect();
    assert_eq!(overall.len(), 2);
    assert!(overall[0].starts_with("dtree,robust,data,angle,"));
    assert!(overall[1].starts_with("reference_table,raw,data,angle,"));

    let report = std::fs::read_to_string(d.join("report.csv")).unwrap();
    let header = report.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "distance_m,data/dtree/robust/angle,data/reference_table/raw/angle"
    );
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("run.toml"), CONFIG).unwrap();
    ok(
        d,
        &["--config", "run.toml", "simulate", "--out", "data.csv"],
    );
    ok(
        d,
        &[
            "--config",
            "run.toml",
            "train",
            "--data",
            "data.csv",
            "--model",
            "knn",
            "--scaler",
            "unit-norm",
            "--out",
            "m.json",
        ],
    );
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("m.json")).unwrap()).unwrap();
    assert_eq!(model["kind"], "knn");
    assert_eq!(model["scaler"]["kind"], "unit-norm");
}

#[test]
fn reruns_are_byte_identical_regardless_of_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("run.toml"), CONFIG).unwrap();
    for (tag, threads) in [("a", "1"), ("b", "4")] {
        ok(
            d,
            &[
                "--threads",
                threads,
                "--config",
                "run.toml",
                "simulate",
                "--out",
                &format!("{tag}.csv"),
            ],
        );
        ok(
            d,
            &[
                "--threads",
                threads,
                "--config",
                "run.toml",
                "train",
                "--data",
                &format!("{tag}.csv"),
                "--out",
                &format!("{tag}.json"),
            ],
        );
        ok(
            d,
            &[
                "--threads",
                threads,
                "--config",
                "run.toml",
                "evaluate",
                "--data",
                &format!("{tag}.csv"),
                "--model",
                &format!("{tag}.json"),
                "--dataset-name",
                "x",
                "--out",
                &format!("{tag}-m.csv"),
            ],
        );
    }
    for (a, b) in [
        ("a.csv", "b.csv"),
        ("a.json", "b.json"),
        ("a-m.csv", "b-m.csv"),
    ] {
        assert_eq!(
            std::fs::read(d.join(a)).unwrap(),
            std::fs::read(d.join(b)).unwrap(),
            "{a} vs {b}"
        );
    }
}

#[test]
fn exit_codes_follow_error_categories() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let code = |args: &[&str]| radloc(d, args).status.code().unwrap();

    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    // usage
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["simulate", "--preset", "S9", "--out", "x.csv"]), 1);
    std::fs::write(d.join("bad.toml"), "[grid]\npreset = \"S1\"\ncolour = 3\n").unwrap();
    assert_eq!(
        code(&["--config", "bad.toml", "simulate", "--out", "x.csv"]),
        1
    );
    assert_eq!(
        code(&["train", "--data", "missing.csv", "--out", "m.json"]),
        1
    );

    // schema
    std::fs::write(d.join("junk.csv"), "a,b\n1,2\n").unwrap();
    let out = radloc(d, &["train", "--data", "junk.csv", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[schema]: "), "{err}");
    assert_eq!(err.lines().count(), 1);

    ok(d, &["simulate", "--preset", "L1-small", "--out", "l1.csv"]);
    std::fs::write(d.join("eight.toml"), "[scene]\nn_detectors = 8\n").unwrap();
    assert_eq!(
        code(&[
            "--config",
            "eight.toml",
            "train",
            "--data",
            "l1.csv",
            "--out",
            "m.json"
        ]),
        2
    );
    ok(d, &["calibrate", "--preset", "L1-small", "--out", "t.json"]);
    assert_eq!(
        code(&["evaluate", "--data", "l1.csv", "--model", "t.json", "--out", "m.csv"]),
        2
    );
    std::fs::write(d.join("trunc.json"), "{\"format_version\": 1, \"kind\": ").unwrap();
    assert_eq!(
        code(&[
            "evaluate",
            "--data",
            "l1.csv",
            "--model",
            "trunc.json",
            "--out",
            "m.csv"
        ]),
        2
    );

    // numeric: a source placed inside a detector
    std::fs::write(d.join("inside.toml"), "[grid]\npreset = \"L1-small\"\ndistances = { start = 0.1, end = 0.1, step = 1.0 }\n[scene]\nring_radius = 0.1\n").unwrap();
    let out = radloc(
        d,
        &["--config", "inside.toml", "simulate", "--out", "x.csv"],
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
