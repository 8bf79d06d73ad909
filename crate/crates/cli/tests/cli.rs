//! End-to-end runs of the `subdiff` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn subdiff(args: &[&str], envs: &[(&str, &Path)], cwd: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_subdiff"));
    cmd.args(args).current_dir(cwd).env_remove("SUBDIFF_OUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zero_preset_writes_zero_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = subdiff(&["solve", "--preset", "zero", "--out", "run"], &[], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("run/solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,t,u"));
    let mut rows = 0;
    for line in lines {
        let u: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(u, 0.0, "{line}");
        rows += 1;
    }
    assert!(rows > 0);
    let summary = json(&dir.path().join("run/summary.json"));
    assert_eq!(summary["command"], "solve");
    assert!(summary["timing"]["wall_seconds"].is_number());
}

#[test]
fn invalid_config_exits_two_with_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[problem]\npreset = \"eigenmode\"\nalpha = 1.5\n").unwrap();
    let out = subdiff(&["solve", "--config", cfg.to_str().unwrap(), "--out", "err"], &[], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let record = json(&dir.path().join("err/error.json"));
    assert_eq!(record["error"]["kind"], "validation");
    assert_eq!(record["error"]["exit_status"], 2);
    assert!(record["error"]["message"].as_str().unwrap().contains("alpha"));
}

#[test]
fn syntax_error_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[problem]\nalpha = = 0.5\n").unwrap();
    let out = subdiff(&["solve", "--config", cfg.to_str().unwrap(), "--out", "err"], &[], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let record = json(&dir.path().join("err/error.json"));
    assert_eq!(record["error"]["kind"], "parse");
    assert!(record["error"]["message"].as_str().unwrap().contains("line 2"));
}

#[test]
fn missing_problem_source_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = subdiff(&["solve", "--out", "err"], &[], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&dir.path().join("err/error.json"))["error"]["kind"], "usage");
}

#[test]
fn environment_names_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let out = subdiff(&["kernel-gap", "--preset", "eigenmode"], &[("SUBDIFF_OUT_DIR", &target)], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report = json(&target.join("kernel_gap.json"));
    assert!(report["halving_ratio"].as_f64().unwrap() > 1.8);
    assert!(!dir.path().join("subdiff-out").exists());

    let out = subdiff(&["kernel-gap", "--preset", "zero"], &[], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("subdiff-out/kernel_gap.json").exists());
}

#[test]
fn sign_flip_fails_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let out = subdiff(&["diagnose", "--preset", "eigenmode", "--inject-sign-flip", "1", "--out", "d"], &[], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let report = json(&dir.path().join("d/diagnose.json"));
    assert_eq!(report["pass"], false);

    let out = subdiff(&["diagnose", "--preset", "eigenmode", "--out", "ok"], &[], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("ok/diagnose.json"))["pass"], true);
}

#[test]
fn custom_expressions_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("custom.toml");
    std::fs::write(
        &cfg,
        "seed = 7\n[problem]\nalpha = 0.3\nfinal_time = 0.5\nsteps = 20\nx = [0.0, 2.0]\nnodes = 31\n\
         a = \"1 + x^2/4\"\nf = \"t*sin(pi*x/2)\"\nu0 = \"x*(2 - x)\"\n",
    )
    .unwrap();
    let out = subdiff(&["solve", "--config", cfg.to_str().unwrap(), "--out", "c"], &[], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("c/summary.json"));
    assert!(summary["oracle"].is_null());
    assert!(summary["residuals"]["within_invariant"].as_bool().unwrap());
}
