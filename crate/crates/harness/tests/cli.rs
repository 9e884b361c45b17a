//! End-to-end checks of the `tomo` binary: round trips through files,
//! output formats, and the documented exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn tomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

const STATE: &str = "[[0.7071067811865476, 0.0], [0.0, -0.7071067811865476]]";
const NOISE: &str = r#"{"readout": {"p10": 0.015625, "p01": 0.0830078125}}"#;

#[test]
fn simulate_then_reconstruct_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    let noise = dir.path().join("noise.json");
    write(&state, STATE);
    write(&noise, NOISE);

    let sim = tomo(&[
        "simulate",
        "--protocol",
        "pauli:1",
        "--state",
        state.to_str().unwrap(),
        "--shots",
        "3072",
        "--seed",
        "7",
        "--noise",
        noise.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(sim.status.success(), "simulate failed: {}", stderr(&sim));
    let counts = dir.path().join("counts.json");
    assert!(counts.exists());

    let rec = tomo(&[
        "reconstruct",
        "--protocol",
        "pauli:1",
        "--counts",
        counts.to_str().unwrap(),
        "--noise",
        noise.to_str().unwrap(),
        "--truth",
        state.to_str().unwrap(),
    ]);
    assert!(rec.status.success(), "reconstruct failed: {}", stderr(&rec));
    let v: serde_json::Value = serde_json::from_str(&stdout(&rec)).unwrap();
    assert!(v["converged"].as_bool().unwrap());
    assert!(v["fidelity"].as_f64().unwrap() > 0.99);
    assert_eq!(v["estimate"].as_array().unwrap().len(), 2);
}

#[test]
fn theory_reports_the_precision_profile() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    write(&state, STATE);
    let out = tomo(&[
        "theory",
        "--protocol",
        "pauli:1",
        "--state",
        state.to_str().unwrap(),
        "--shots",
        "9999",
    ]);
    assert!(out.status.success(), "theory failed: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["nu"].as_u64().unwrap(), 2);
    assert_eq!(v["d"].as_array().unwrap().len(), 2);
    assert!((v["L"].as_f64().unwrap() - 1.5).abs() < 0.01);
}

#[test]
fn csv_format_prints_the_documented_headers() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    write(&state, STATE);
    let out = tomo(&[
        "simulate",
        "--protocol",
        "pauli:1",
        "--state",
        state.to_str().unwrap(),
        "--shots",
        "999",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("row,setting,count\n"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn compare_runs_end_to_end_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = tomo(&[
        "compare",
        "--trials",
        "3",
        "--shots",
        "999",
        "--seed",
        "11",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "compare failed: {}", stderr(&out));
    for name in ["result.json", "trials.csv", "aggregate.csv"] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(summary["supremacy"].as_array().unwrap().len() == 4);
}

#[test]
fn bad_usage_exits_one() {
    let nonsense = tomo(&["frobnicate"]);
    assert_eq!(nonsense.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let sweep_cfg =
        serde_json::to_string(&qst_harness::config::ExperimentConfig::default_sweep()).unwrap();
    write(&cfg, &sweep_cfg);
    let mismatched = tomo(&["compare", "--config", cfg.to_str().unwrap()]);
    assert_eq!(mismatched.status.code(), Some(1));
    assert!(stderr(&mismatched).contains("config is for"));
}

#[test]
fn numeric_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    write(&state, STATE);
    let sim = tomo(&[
        "simulate",
        "--protocol",
        "pauli:1",
        "--state",
        state.to_str().unwrap(),
        "--shots",
        "999",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(sim.status.success());
    // Counts drawn for a six-row protocol cannot drive a 72-row one.
    let rec = tomo(&[
        "reconstruct",
        "--protocol",
        "mub:8",
        "--counts",
        dir.path().join("counts.json").to_str().unwrap(),
    ]);
    assert_eq!(rec.status.code(), Some(2), "stderr: {}", stderr(&rec));
}

#[test]
fn io_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    write(&state, STATE);
    let blocker = dir.path().join("blocked");
    write(&blocker, "not a directory");
    let out = tomo(&[
        "simulate",
        "--protocol",
        "pauli:1",
        "--state",
        state.to_str().unwrap(),
        "--shots",
        "999",
        "--out",
        blocker.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
}
