//! End-to-end checks of the binary: exit codes, stdout formats, artifacts.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_invariant-cloud");

fn invariant_cloud(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn write_mini_config(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("out").to_string_lossy().into_owned();
    let text = serde_json::json!({
        "map": {"kind": "linear_1d", "params": {"a": 0.5}},
        "box": {"lower": [-1.0], "upper": [1.0]},
        "init": {"kind": "uniform_random"},
        "n": 8,
        "optim": {"grad_tol": 1e-8, "max_iters": 50, "snapshot_every": 0},
        "reference": {"kind": "point_singleton", "point": [0.0]},
        "output": out,
        "seed": 3
    });
    let path = dir.join("mini.json");
    std::fs::write(&path, serde_json::to_string_pretty(&text).unwrap()).unwrap();
    path
}

fn write_cloud_csv(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("cloud.csv");
    std::fs::write(&path, "x0\n2.5e-1\n-2.5e-1\n").unwrap();
    path
}

#[test]
fn run_reports_outcome_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_mini_config(dir.path());
    let output = invariant_cloud(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let text = stdout(&output);
    assert!(text.contains("iterations"), "stdout: {text}");
    assert!(text.contains("d_h="), "stdout: {text}");
    let out = dir.path().join("out");
    for file in ["cloud_final.csv", "metrics.csv", "quality.csv", "manifest.json"] {
        assert!(out.join(file).is_file(), "{file} missing");
    }
}

#[test]
fn run_honors_out_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_mini_config(dir.path());
    let elsewhere = dir.path().join("elsewhere");
    let output = invariant_cloud(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        elsewhere.to_str().unwrap(),
        "--seed",
        "99",
    ]);
    assert_eq!(code(&output), 0);
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(elsewhere.join("manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], serde_json::json!(99));
    assert!(!dir.path().join("out").exists(), "default output ignored the override");
}

#[test]
fn run_rejects_unknown_map_with_config_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_mini_config(dir.path());
    let text = std::fs::read_to_string(&config)
        .unwrap()
        .replace("linear_1d", "spiral_map");
    std::fs::write(&config, text).unwrap();
    let output = invariant_cloud(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&output), 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("spiral_map"));
}

#[test]
fn run_rejects_malformed_json_with_config_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ this is not json").unwrap();
    let output = invariant_cloud(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&output), 2);
}

#[test]
fn run_missing_config_is_a_runtime_error() {
    let output = invariant_cloud(&["run", "--config", "/nonexistent/nowhere.json"]);
    assert_eq!(code(&output), 1);
}

#[test]
fn verify_prints_quality_line() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = write_cloud_csv(dir.path());
    let output = invariant_cloud(&[
        "verify",
        "--cloud",
        cloud.to_str().unwrap(),
        "--reference",
        r#"{"kind": "point_singleton", "point": [0.0]}"#,
    ]);
    assert_eq!(code(&output), 0);
    let text = stdout(&output);
    assert!(
        text.starts_with("d_h=2.5"),
        "two points at ±0.25 against the origin: {text}"
    );
    assert!(text.contains("d_forward=") && text.contains("d_backward="));
}

#[test]
fn verify_rejects_foreign_reference_field() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = write_cloud_csv(dir.path());
    let output = invariant_cloud(&[
        "verify",
        "--cloud",
        cloud.to_str().unwrap(),
        "--reference",
        r#"{"kind": "point_singleton", "radius": 1.0}"#,
    ]);
    assert_eq!(code(&output), 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("reference.radius"));
}

#[test]
fn plot_renders_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = write_cloud_csv(dir.path());
    let svg = dir.path().join("plot.svg");
    let output = invariant_cloud(&[
        "plot",
        "--in",
        cloud.to_str().unwrap(),
        "--delta",
        "0.1",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<?xml"));
    assert!(text.contains("class=\"pt\"") && text.contains("class=\"ball\""));
}

#[test]
fn plot_rejects_unknown_projection_via_usage_error() {
    let output = invariant_cloud(&["plot", "--in", "x.csv", "--proj", "qq", "--out", "y.svg"]);
    assert_eq!(code(&output), 2);
}

#[test]
fn plot_missing_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("plot.svg");
    let output = invariant_cloud(&[
        "plot",
        "--in",
        "/nonexistent/cloud.csv",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 1);
}
