mod common;

use std::process::Command;

use common::fixture;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_crystal-tc0")).args(args).output().expect("binary runs");
    let code = out.status.code().expect("exit code");
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, json)
}

fn path(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

fn eval(model: &str, extra: &[&str]) -> (i32, Value) {
    let crystal = path("crystal.json");
    let model = path(model);
    let mut args = vec!["eval", "--crystal", &crystal, "--model", &model];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn zero_weights_give_zeros() {
    let (code, out) = eval("model_zero.json", &[]);
    assert_eq!(code, 0);
    let cols = out["payload"]["output"].as_array().unwrap();
    assert_eq!(cols.len(), 4);
    assert!(cols.iter().flat_map(|c| c.as_array().unwrap()).all(|v| v.as_f64() == Some(0.0)));
}

#[test]
fn same_seed_same_checksum() {
    let (_, a) = eval("model.json", &["--seed", "3"]);
    let (_, b) = eval("model.json", &["--seed", "3"]);
    let (_, c) = eval("model.json", &["--seed", "4"]);
    assert_eq!(a["payload"], b["payload"]);
    assert_ne!(a["payload"]["output_checksum"], c["payload"]["output_checksum"]);
}

#[test]
fn fpn_deviation_is_small() {
    let (code, out) = eval("model.json", &["--mode", "fpn", "--p", "24"]);
    assert_eq!(code, 0);
    let dev = out["payload"]["max_abs_deviation_from_real"].as_f64().unwrap();
    assert!(dev <= 1e-4, "{dev}");
}

#[test]
fn eval_exit_codes() {
    let crystal = path("crystal.json");
    let model = path("model.json");
    let missing = path("crystal_missing_lattice.json");
    let outside = path("crystal_frac_out_of_range.json");
    assert_eq!(run(&["eval", "--crystal", &missing, "--model", &model]).0, 2);
    assert_eq!(run(&["eval", "--crystal", &outside, "--model", &model]).0, 3);
    assert_eq!(run(&["eval", "--crystal", &crystal, "--model", &crystal]).0, 2);
    assert_eq!(run(&["eval", "--crystal", &crystal, "--model", &model, "--mode", "fpn", "--p", "1"]).0, 2);
}

#[test]
fn check_bounds_default_and_corrupted() {
    let (code, out) = run(&["check-bounds"]);
    assert_eq!(code, 0);
    let egnn = out["payload"]["bounds"]["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["construct"] == "egnn")
        .unwrap()
        .clone();
    assert_eq!(egnn["claimed"]["d_std"], 36);
    assert_eq!(egnn["claimed"]["d_plus"], 8);
    assert_eq!(egnn["claimed"]["d_times"], 4);
    let table = path("depth_table_corrupted.json");
    assert_eq!(run(&["check-bounds", "--depth-table", &table]).0, 1);
}

#[test]
fn synth_exit_codes() {
    let (code, out) = run(&["synth", "--op", "add", "--p", "2"]);
    assert_eq!(code, 0);
    assert_eq!(out["payload"]["mismatches"], 0);
    assert_eq!(run(&["synth", "--op", "leq", "--p", "3"]).0, 0);
    assert_eq!(run(&["synth", "--op", "mul", "--p", "5"]).0, 2);
}

#[test]
fn synth_writes_both_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let circuit = dir.path().join("circuit.json");
    let (code, _) = run(&[
        "synth",
        "--op",
        "div",
        "--p",
        "2",
        "--out",
        report.to_str().unwrap(),
        "--circuit-out",
        circuit.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["schema_version"], 1);
    let c = crystal_tc0::circuit::ThresholdCircuit::from_json(&std::fs::read_to_string(&circuit).unwrap()).unwrap();
    assert_eq!(c.depth(), 3);
}

#[test]
fn scaling_csv_and_selftest() {
    let out = Command::new(env!("CARGO_BIN_EXE_crystal-tc0"))
        .args(["scaling", "--n-list", "2,4,8", "--regime", "fixed"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,macro_size,slope\n2,"));
    assert_eq!(text.lines().count(), 4);
    assert_eq!(run(&["scaling", "--n-list", "4,2,8"]).0, 2);
    let (code, st) = run(&["selftest"]);
    assert_eq!(code, 0);
    assert_eq!(st["payload"]["passed"], true);
}

#[test]
fn compile_reports_depth() {
    let (code, out) = run(&["compile", "--construct", "fourier"]);
    assert_eq!(code, 0);
    assert_eq!(out["payload"]["depth"]["d_std"], 10);
    let (_, serial) = run(&["compile", "--construct", "fourier", "--serialize-trig"]);
    assert!(serial["payload"]["depth"]["d_std"].as_u64().unwrap() > 10);
}
