use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn gclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gclab")).args(args).output().expect("binary runs")
}

fn run(cmd: &str, config: &Path, out: &Path) -> (i32, Value) {
    let o = gclab(&[cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let code = o.status.code().expect("exit code");
    let report = serde_json::from_slice(&o.stdout).unwrap_or(Value::Null);
    (code, report)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, r) = run("validate", &fixture("validate_d3.json"), tmp.path());
    assert_eq!(code, 0);
    assert_eq!(r["passed"], true);
    assert_eq!(run("validate", &fixture("validate_c1.json"), tmp.path()).0, 0);
    let q8 = write_config(tmp.path(), "q8.json", r#"{ "group": "Q8" }"#);
    let o = gclab(&["validate", "--config", q8.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed group spec"));
}

#[test]
fn usage_and_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(gclab(&["validate"]).status.code(), Some(2));
    assert_eq!(gclab(&["frobnicate", "--config", "x"]).status.code(), Some(2));
    let missing = tmp.path().join("nope.json");
    assert_eq!(run("predict", &missing, tmp.path()).0, 2);
    let unknown = write_config(tmp.path(), "bad.json", r#"{ "group": "C5", "colour": 3 }"#);
    assert_eq!(run("predict", &unknown, tmp.path()).0, 2);
    let wrong = write_config(tmp.path(), "wrong.json", r#"{ "experiment": "predict", "group": "C5" }"#);
    assert_eq!(run("construct", &wrong, tmp.path()).0, 2);
}

#[test]
fn predict_reports_ratio_and_ties() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, r) = run("predict", &fixture("predict_d3_k3.json"), tmp.path());
    assert_eq!(code, 0);
    let order = r["order"].as_array().unwrap();
    assert_eq!(order[0]["name"], "sign");
    assert_eq!(order[1]["name"], "2d_1");
    let ratio = order[0]["score"].as_f64().unwrap() / order[1]["score"].as_f64().unwrap();
    assert!((ratio - 2.0).abs() < 1e-10);

    let (_, r) = run("predict", &fixture("predict_c5_k2.json"), tmp.path());
    let pl: Vec<f64> = r["plateaus"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (a, b) in pl.iter().zip([0.4, 0.2, 0.0]) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(r["has_ties"], true);
    assert!(!r["warnings"].as_array().unwrap().is_empty());

    let single = write_config(
        tmp.path(),
        "single.json",
        r#"{ "group": "D3", "encoding": { "type": "fourier", "alphas": { "sign": 1.0 } } }"#,
    );
    let (_, r) = run("predict", &single, tmp.path());
    assert_eq!(r["order"].as_array().unwrap().len(), 1);
    assert_eq!(r["plateaus"].as_array().unwrap().len(), 2);
}

#[test]
fn construct_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, r) = run("construct", &fixture("construct_mlp_c5.json"), tmp.path());
    assert_eq!(code, 0);
    assert_eq!(r["report"]["width"], 30);
    let (code, r) = run("construct", &fixture("construct_rnn_c5.json"), tmp.path());
    assert_eq!(code, 0);
    assert_eq!(r["report"]["width"], 30);
    assert_eq!(run("construct", &fixture("construct_deep_c3.json"), tmp.path()).0, 0);
    let odd = write_config(tmp.path(), "odd.json", r#"{ "group": "C3", "k": 3, "construct": { "arch": "deep" } }"#);
    assert_eq!(run("construct", &odd, tmp.path()).0, 2);
}

#[test]
fn train_is_deterministic_and_never_overwrites() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c5.json",
        r#"{ "group": "C5", "k": 2, "model": { "hidden": 60 }, "train": { "max_steps": 3000, "eval_every": 100 } }"#,
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (code, r) = run("train", &cfg, &a);
    assert_eq!(code, 0);
    assert!(r["final_norm_loss"].as_f64().unwrap() < 1e-3);
    run("train", &cfg, &b);
    run("train", &cfg, &b);
    let dirs = |p: &Path| {
        let mut v: Vec<PathBuf> = std::fs::read_dir(p).unwrap().map(|e| e.unwrap().path()).collect();
        v.sort();
        v
    };
    let (da, db) = (dirs(&a), dirs(&b));
    assert_eq!(db.len(), 2);
    assert!(db[1].to_str().unwrap().ends_with("-2"));
    let csv_a = std::fs::read(da[0].join("metrics.csv")).unwrap();
    for d in &db {
        assert_eq!(std::fs::read(d.join("metrics.csv")).unwrap(), csv_a);
    }
    let header = String::from_utf8_lossy(&csv_a).lines().next().unwrap().to_string();
    assert_eq!(header, "step,loss,norm_loss,A_rho1|rho4,A_rho2|rho3");
    let sidecar: Value = serde_json::from_slice(&std::fs::read(da[0].join("run.json")).unwrap()).unwrap();
    assert_eq!(sidecar["schema_version"], 1);
    assert!(sidecar["code_version"].as_str().unwrap().starts_with("gclab"));
    assert!(da[0].join("config.json").exists());

    let o = gclab(&["train", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(dirs(&a).len(), 2);
}

#[test]
fn sweep_guards() {
    let tmp = tempfile::tempdir().unwrap();
    let cyclic = write_config(tmp.path(), "c5.json", r#"{ "group": "C5" }"#);
    let o = gclab(&["bias-sweep", "--config", cyclic.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("higher-dimensional"));
    let big = write_config(
        tmp.path(),
        "big.json",
        r#"{ "phase": { "orders": [5, 10, 15, 20, 25, 30, 35], "hidden": [8] } }"#,
    );
    assert_eq!(run("phase-diagram", &big, tmp.path()).0, 2);
    let long = write_config(tmp.path(), "long.json", r#"{ "train": { "max_steps": 1000000 } }"#);
    assert_eq!(run("phase-diagram", &long, tmp.path()).0, 2);
}

#[test]
fn small_phase_diagram_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "phase.json",
        r#"{ "k": 2, "model": { "init_scale": 0.01 }, "train": { "max_steps": 2000, "eval_every": 500 },
             "phase": { "orders": [5], "hidden": [64] } }"#,
    );
    let (code, r) = run("phase-diagram", &cfg, tmp.path());
    assert_eq!(code, 0);
    assert_eq!(r["boundaries"][0]["widths"], serde_json::json!([10, 20, 30]));
    let dir = std::fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().path()).find(|p| p.is_dir()).unwrap();
    let text = std::fs::read_to_string(dir.join("phase.csv")).unwrap();
    assert!(text.starts_with("group_order,hidden,norm_loss,steps,status\n5,64,"));
    assert!(dir.join("sweep.json").exists());
}
