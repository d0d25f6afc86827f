use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BAND: &str = r#"{"construction":"band","operator":{"kind":"shift"},"steps":24,"K":2,
    "lambda_spec":{"kind":"spiral","radius":0.8,"turn":0.3819},"seed":7}"#;

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forge")).args(args).output().unwrap()
}

/// The single JSON line on stdout.
fn line(out: &Output) -> Value {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "stdout: {text}");
    serde_json::from_str(lines[0]).unwrap()
}

fn build(dir: &Path, config: &str) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("run");
    forge(&["build", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

#[test]
fn build_verify_export_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let out = build(tmp.path(), BAND);
    assert_eq!(out.status.code(), Some(0));
    let v = line(&out);
    assert_eq!((v["status"].as_str(), v["steps"].as_u64()), (Some("ok"), Some(24)));
    let run = tmp.path().join("run");
    for f in ["state.json", "steps.jsonl", "report.json"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    assert_eq!(std::fs::read_to_string(run.join("steps.jsonl")).unwrap().lines().count(), 24);

    let out = forge(&["verify", "--run", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(line(&out)["pass"], Value::Bool(true));

    let out = forge(&["export", "--run", run.to_str().unwrap(), "--format", "csv", "--size", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(run.join("matrix.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "j,1,2,3,4,5");
    assert_eq!(rows.len(), 6);
    assert!(rows[1..].iter().all(|r| r.split(',').count() == 6));
    assert!(std::fs::read_to_string(run.join("decay.csv"))
        .unwrap()
        .starts_with("n,m,residual_norm\n"));

    let out = forge(&["export", "--run", run.to_str().unwrap(), "--format", "json", "--size", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(run.join("matrix.json")).unwrap()).unwrap();
    assert_eq!(m["size"].as_u64(), Some(3));
    assert_eq!(m["rows"].as_array().map(Vec::len), Some(3));
}

#[test]
fn export_size_limits() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(build(tmp.path(), BAND).status.code(), Some(0));
    let run = tmp.path().join("run");
    let out = forge(&["export", "--run", run.to_str().unwrap(), "--format", "csv", "--size", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(run.join("matrix.csv")).unwrap(), "j\n");
    let out = forge(&["export", "--run", run.to_str().unwrap(), "--format", "csv", "--size", "25"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(line(&out)["status"].as_str(), Some("error"));
}

#[test]
fn bad_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = build(tmp.path(), r#"{"construction":"band","steps":3}"#);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(line(&out)["kind"].as_str(), Some("input"));
    let out = forge(&["verify", "--run", tmp.path().join("missing").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    line(&out);
    assert_eq!(forge(&["build"]).status.code(), Some(2));
}

#[test]
fn halted_construction_exits_3_with_partial_state() {
    let tmp = tempfile::tempdir().unwrap();
    // |λ| = 1.5 lies outside the closed unit disk
    let cfg = r#"{"construction":"band","operator":{"kind":"shift"},"steps":5,"K":1,
        "lambda_spec":{"kind":"constant","value":[1.5,0.0]}}"#;
    let out = build(tmp.path(), cfg);
    assert_eq!(out.status.code(), Some(3));
    let v = line(&out);
    assert_eq!(v["step"].as_u64(), Some(1));
    let state: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("run/state.json")).unwrap()).unwrap();
    assert!(state["halted"].is_string());
    assert_eq!(state["basis"].as_array().map(Vec::len), Some(0));
}

#[test]
fn tampered_state_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(build(tmp.path(), BAND).status.code(), Some(0));
    let path = tmp.path().join("run/state.json");
    let mut state: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let coeff = &mut state["basis"][3][0][1];
    *coeff = Value::from(coeff.as_f64().unwrap() + 1e-3);
    std::fs::write(&path, serde_json::to_string(&state).unwrap()).unwrap();
    let out = forge(&["verify", "--run", tmp.path().join("run").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(line(&out)["kind"].as_str(), Some("audit"));
}
