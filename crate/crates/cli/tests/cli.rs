use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vertexsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vertexsim")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    vertexsim(&all)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn spectrum_of_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["spectrum", "--fixture", "--n", "4", "--seed", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("summary.json"));
    assert!((summary["ratio"].as_f64().unwrap() - 0.112267).abs() < 1e-5);
    assert_eq!(summary["seed"], 1);
    assert_eq!(summary["seed_from_entropy"], false);
    for f in ["eigenvalues.csv", "psi0.csv", "spectrum.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn format_filter_limits_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["spectrum", "--fixture", "--n", "2", "--format", "csv"]);
    assert!(out.status.success());
    assert!(dir.path().join("eigenvalues.csv").exists());
    assert!(!dir.path().join("summary.json").exists());
    assert!(!dir.path().join("spectrum.svg").exists());
}

#[test]
fn missing_seed_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen-model", "--c", "0.3"]);
    assert!(out.status.success());
    let stdout: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout["seed_from_entropy"], true);
    let model = json(&dir.path().join("model.json"));
    assert_eq!(model["seed"], stdout["seed"]);
}

#[test]
fn generated_model_round_trips_through_file() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["gen-model", "--c", "0.4", "--seed", "7"]).status.success());
    let file = dir.path().join("model.json");
    let a = run_in(&dir.path().join("a"), &["spectrum", "--c", "0.4", "--seed", "7", "--n", "3"]);
    let b = run_in(&dir.path().join("b"), &["spectrum", "--energies-file", file.to_str().unwrap(), "--n", "3"]);
    assert!(a.status.success() && b.status.success());
    let ra = json(&dir.path().join("a/summary.json"))["lambda0"].as_f64().unwrap();
    let rb = json(&dir.path().join("b/summary.json"))["lambda0"].as_f64().unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn simulate_is_deterministic_under_seed() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let args = ["simulate", "--fixture", "--n", "2", "--m", "2", "--shots", "20000", "--seed", "11"];
    assert!(run_in(d1.path(), &args).status.success());
    assert!(run_in(d2.path(), &args).status.success());
    for f in ["histogram.csv", "comparison.csv"] {
        assert_eq!(fs::read(d1.path().join(f)).unwrap(), fs::read(d2.path().join(f)).unwrap(), "{f}");
    }
    let meta = json(&d1.path().join("histogram.json"));
    assert_eq!(meta["seed"], 11);
}

#[test]
fn exact_simulation_matches_dense_power() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["simulate", "--fixture", "--n", "3", "--m", "3", "--mode", "exact", "--input", "uniform"]);
    assert!(out.status.success());
    let summary = json(&dir.path().join("summary.json"));
    assert!(summary["max_abs_gap"].as_f64().unwrap() < 1e-12);
    assert!(!dir.path().join("histogram.csv").exists());
}

#[test]
fn estimate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["estimate", "--fixture", "--n", "2", "--inputs", "4", "--mode", "exact", "--seed", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("estimates.csv")).unwrap();
    assert!(csv.starts_with("N,M,distance,shots,meaningful_fraction,estimate,oracle\n"));
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(json(&dir.path().join("report.json"))["reports"].as_array().unwrap().len(), 4);
}

#[test]
fn exported_circuit_has_header() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["export-circuit", "--fixture", "--n", "3", "--m", "2"]).status.success());
    let text = fs::read_to_string(dir.path().join("circuit.txt")).unwrap();
    assert!(text.starts_with("# vertex circuit v1\n"));
    let d = tempfile::tempdir().unwrap();
    let out = run_in(d.path(), &["export-circuit", "--fixture", "--kind", "d-test", "--seed", "1"]);
    assert!(out.status.success());
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["qubits"], 3);
    assert_eq!(summary["postselects"], 1);
}

#[test]
fn inspect_reports_factors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["inspect", "--fixture"]).status.success());
    let f = json(&dir.path().join("factors.json"));
    assert_eq!(f["svd"]["d"][0], 1.0);
    assert_eq!(f["three_step"].as_array().unwrap().len(), 3);
}

#[test]
fn convergence_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["convergence", "--fixture", "--n-list", "2,3", "--m-list", "0,2", "--mode", "exact"],
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(fs::read_to_string(dir.path().join("convergence.svg")).unwrap().contains("<polyline"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run_in(dir.path(), args).status.code();
    // No model source.
    assert_eq!(code(&["spectrum", "--n", "2"]), Some(2));
    // Dense assembly above the cap.
    assert_eq!(code(&["spectrum", "--fixture", "--n", "13"]), Some(2));
    assert_eq!(code(&["gen-model", "--c", "0.5", "--beta", "-1", "--seed", "1"]), Some(2));
    assert_eq!(code(&["spectrum", "--model", "/nonexistent/model.json", "--n", "2"]), Some(2));
    // Too few shots survive the post-selections.
    assert_eq!(
        code(&["simulate", "--fixture", "--n", "6", "--m", "3", "--shots", "200", "--floor", "1000", "--seed", "1"]),
        Some(3)
    );
}
