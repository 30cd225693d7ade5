//! End-to-end runs of the `nfl` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const VALIDATE: &str = r#"{
  "version": 1,
  "experiment": "validate",
  "kernel": {"family": "gaussian", "sigma": 1.0},
  "nonlinearity": {"kind": "homogeneous", "family": "bistable", "theta": 0.25}
}"#;

const SIMULATE: &str = r#"{
  "version": 1,
  "experiment": "simulate",
  "kernel": {"family": "gaussian", "sigma": 1.0},
  "nonlinearity": {"kind": "homogeneous", "family": "bistable", "theta": 0.25},
  "grid": {"dx": 0.1, "x_min": -15.0, "x_max": 15.0},
  "initial": {"profile": "smoothed_step", "center": 0.0, "width": 2.0},
  "integrator": {"dt": 0.05, "t_end": 4.0, "recenter": 0.5, "save_every": 10}
}"#;

fn nfl(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nfl"));
    cmd.args(args).env_remove("NFL_WORKERS");
    if let Some(w) = workers {
        cmd.env("NFL_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_exp(tag: &str, cfg: &Path, out: &Path, workers: Option<&str>) -> Output {
    nfl(&[tag, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], workers)
}

#[test]
fn validate_passes_and_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", VALIDATE);
    let out = tmp.path().join("run");
    let o = run_exp("validate", &cfg, &out, None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["pass"], true);
    assert_eq!(rep["tolerances"]["h1"], 1e-8);
    assert!(rep["results"]["h1"]["pass"].as_bool().unwrap());
    assert!(out.join("config.json").is_file());
}

#[test]
fn negative_sigma_names_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &VALIDATE.replace("\"sigma\": 1.0", "\"sigma\": -1.0"));
    let o = run_exp("validate", &cfg, &tmp.path().join("run"), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kernel.sigma"));
}

#[test]
fn tag_mismatch_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", VALIDATE);
    let o = run_exp("wave", &cfg, &tmp.path().join("run"), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment"));
}

#[test]
fn failed_assertion_exits_one() {
    // balanced bistable parses fine but fails the unbalance clause
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &VALIDATE.replace("\"theta\": 0.25", "\"theta\": 0.5"));
    let o = run_exp("validate", &cfg, &tmp.path().join("run"), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("first failing assertion"));
}

#[test]
fn replay_is_bit_identical_across_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SIMULATE);
    let out = tmp.path().join("run");
    let o = run_exp("simulate", &cfg, &out, Some("3"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(out.join("trajectory.csv")).unwrap().starts_with("t,x,u\n"));
    for w in ["1", "4"] {
        let r = nfl(&["replay", out.to_str().unwrap()], Some(w));
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
        let rep: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
        assert_eq!(rep["identical"], true);
    }
}

#[test]
fn edited_config_is_drift() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SIMULATE);
    let out = tmp.path().join("run");
    assert_eq!(run_exp("simulate", &cfg, &out, None).status.code(), Some(0));
    let stored = fs::read_to_string(out.join("config.json")).unwrap();
    fs::write(out.join("config.json"), stored.replace("\"dt\": 0.05", "\"dt\": 0.025")).unwrap();
    let r = nfl(&["replay", out.to_str().unwrap()], None);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("config drift"));
}

#[test]
fn replay_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let r = nfl(&["replay", tmp.path().to_str().unwrap()], None);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("missing artifacts"));
}

#[test]
fn tampered_artifact_is_detected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SIMULATE);
    let out = tmp.path().join("run");
    assert_eq!(run_exp("simulate", &cfg, &out, None).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("fronts.csv")).unwrap();
    fs::write(out.join("fronts.csv"), csv + "0,0\n").unwrap();
    let r = nfl(&["replay", out.to_str().unwrap()], None);
    assert_eq!(r.status.code(), Some(1));
    let rep: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(rep["mismatched"][0], "fronts.csv");
}
