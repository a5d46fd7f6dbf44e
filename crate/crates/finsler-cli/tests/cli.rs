//! End-to-end tests of the `finsler` binary: exit codes, error reporting,
//! determinism, environment handling, and trajectory output shape.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_finsler")
}

fn workspace_root() -> PathBuf {
    // CARGO_MANIFEST_DIR = <root>/crates/finsler-cli
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .unwrap()
        .to_path_buf()
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary should launch")
}

fn write_tmp(dir: &tempfile::TempDir, name: &str, value: &Value) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

/// A small scenario used by most tests: flat Randers metric with a bump
/// factor, a handful of samples.
fn small_scenario() -> Value {
    serde_json::json!({
        "model": {
            "family": "randers",
            "dim": 2,
            "drift": { "base": [0.2, 0.1] }
        },
        "sigma": { "kind": "bump", "amplitude": 0.3, "center": [0.1, -0.2], "width": 1.5 },
        "samples": {
            "count": 5,
            "seed": 11,
            "base_box": [[-1.0, 1.0], [-1.0, 1.0]],
            "fiber_radius": [0.5, 2.0]
        },
        "checks": ["validate", "transform-laws", "invariants"]
    })
}

#[test]
fn bundled_euclidean_scenario_passes_with_tiny_residuals() {
    let config = workspace_root().join("scenarios/euclidean_homothety.json");
    let out = run(&["check", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], Value::Bool(true));
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 20, "expected a full law suite, got {} rows", checks.len());
    for row in checks {
        assert_eq!(row["pass"], Value::Bool(true), "row failed: {row}");
        let max_abs = row["max_abs"].as_f64().unwrap();
        assert!(max_abs <= 1e-12, "{}: residual {max_abs} above 1e-12", row["id"]);
    }
}

#[test]
fn corrupted_tolerance_forces_exit_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut scenario = small_scenario();
    scenario["tolerances"] = serde_json::json!({ "connection": 1e-30 });
    scenario["checks"] = serde_json::json!(["transform-laws"]);
    let config = write_tmp(&dir, "corrupt.json", &scenario);
    let out = run(&["check", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], Value::Bool(false));
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|row| row["pass"] == Value::Bool(false)));
}

#[test]
fn unknown_field_is_rejected_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut scenario = small_scenario();
    scenario["samples"]["bogus"] = serde_json::json!(1);
    let config = write_tmp(&dir, "bad.json", &scenario);
    let out = run(&["check", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("samples.bogus"), "stderr lacks field path: {stderr}");
}

#[test]
fn sigma_requiring_check_without_sigma_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut scenario = small_scenario();
    scenario.as_object_mut().unwrap().remove("sigma");
    scenario["checks"] = serde_json::json!(["transform-laws"]);
    let config = write_tmp(&dir, "nosigma.json", &scenario);
    let out = run(&["check", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("sigma"), "stderr: {stderr}");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tmp(&dir, "det.json", &small_scenario());
    let a = run(&["check", "--config", config.to_str().unwrap()]);
    let b = run(&["check", "--config", config.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "reports differ between identical runs");
}

#[test]
fn seed_override_changes_sampling_but_stays_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tmp(&dir, "seed.json", &small_scenario());
    let base = run(&["check", "--config", config.to_str().unwrap()]);
    let s1 = run(&["check", "--config", config.to_str().unwrap(), "--seed", "99"]);
    let s2 = run(&["check", "--config", config.to_str().unwrap(), "--seed", "99"]);
    assert_eq!(s1.status.code(), Some(0));
    assert_eq!(s1.stdout, s2.stdout);
    assert_ne!(base.stdout, s1.stdout, "seed override did not change the report");
    let report: Value = serde_json::from_slice(&s1.stdout).unwrap();
    assert_eq!(report["seed"].as_u64(), Some(99));
}

#[test]
fn tol_scale_loosens_a_failing_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut scenario = small_scenario();
    scenario["tolerances"] = serde_json::json!({ "connection": 1e-17, "curvature": 1e-17 });
    scenario["checks"] = serde_json::json!(["transform-laws"]);
    let config = write_tmp(&dir, "scale.json", &scenario);
    let tight = run(&["check", "--config", config.to_str().unwrap()]);
    assert_eq!(tight.status.code(), Some(2));
    let loose = run(&[
        "check",
        "--config",
        config.to_str().unwrap(),
        "--tol-scale",
        "1e6",
    ]);
    assert_eq!(loose.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&loose.stderr));
}

#[test]
fn jet_order_env_var_is_honored_per_process() {
    let config = workspace_root().join("scenarios/euclidean_homothety.json");
    let out = Command::new(bin())
        .args(["check", "--config", config.to_str().unwrap()])
        .env("FINSLER_MAX_JET_ORDER", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("jet order 3 is too low"),
        "stderr: {stderr}"
    );

    // A raised order still works and is echoed in the report.
    let out = Command::new(bin())
        .args(["check", "--config", config.to_str().unwrap()])
        .env("FINSLER_MAX_JET_ORDER", "7")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["engine"]["jet_order"].as_u64(), Some(7));
}

#[test]
fn invariants_subcommand_runs_only_invariants() {
    let config = workspace_root().join("scenarios/euclidean_homothety.json");
    let out = run(&["invariants", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|row| row["check"] == "invariants"));
}

#[test]
fn geodesic_subcommand_streams_json_lines_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut scenario = small_scenario();
    scenario["dynamics"] = serde_json::json!({
        "initial": { "x": [0.0, 0.0], "y": [1.0, 0.5] },
        "t_end": 0.1,
        "step": 0.01
    });
    let config = write_tmp(&dir, "traj.json", &scenario);
    let jsonl = dir.path().join("traj.jsonl");
    let csv = dir.path().join("traj.csv");
    let out = run(&[
        "geodesic",
        "--config",
        config.to_str().unwrap(),
        "--out",
        jsonl.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(&jsonl).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    // 10 steps + initial state + trailing stop line.
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[0]["t"].as_f64(), Some(0.0));
    assert_eq!(lines[0]["x"], serde_json::json!([0.0, 0.0]));
    assert_eq!(lines[0]["y"], serde_json::json!([1.0, 0.5]));
    let last = lines.last().unwrap();
    assert_eq!(last["stop"]["reason"], "completed");
    assert!(last["energy_drift"].as_f64().unwrap() < 1e-10);

    let csv_text = fs::read_to_string(&csv).unwrap();
    let mut rows = csv_text.lines();
    assert_eq!(rows.next(), Some("t,x0,x1,y0,y1"));
    assert_eq!(rows.count(), 11);
}

#[test]
fn jacobi_subcommand_emits_fields_and_rates() {
    let dir = tempfile::tempdir().unwrap();
    let mut scenario = small_scenario();
    scenario["dynamics"] = serde_json::json!({
        "initial": { "x": [0.0, 0.0], "y": [1.0, 0.5] },
        "t_end": 0.05,
        "step": 0.01,
        "xi0": [0.0, 1.0]
    });
    let config = write_tmp(&dir, "jac.json", &scenario);
    let out = run(&["jacobi", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 7);
    for key in ["t", "x", "y", "xi", "dxi"] {
        assert!(lines[0].get(key).is_some(), "missing key {key}");
    }
    assert_eq!(lines[0]["xi"], serde_json::json!([0.0, 1.0]));
    assert_eq!(lines.last().unwrap()["stop"]["reason"], "completed");
}
