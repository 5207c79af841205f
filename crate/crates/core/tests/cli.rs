//! End-to-end checks of the command-line interface: subcommand behavior,
//! file formats, exit codes and report determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ncca"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

const IDENTITY_D1: &str =
    r#"{"dimension":1,"states":[0,1],"kind":"dense","table":[0,1,0,1,0,1,0,1]}"#;
const XOR_D1: &str = r#"{"dimension":1,"states":[0,1],"kind":"dense","table":[0,1,1,0,0,1,1,0]}"#;

#[test]
fn check_exits_zero_for_conserving_rules() {
    let dir = tempfile::tempdir().unwrap();
    let rule = write(dir.path(), "rule.json", IDENTITY_D1);
    let out = run(&["check", "--rule", rule.to_str().unwrap()]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["command"], "check");
    assert_eq!(report["payload"]["status"], "conserving");
    assert_eq!(report["payload"]["witness"], Value::Null);
    assert!(report["inputs"]["rule"]["sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn check_exits_one_with_witness_for_violated_rules() {
    let dir = tempfile::tempdir().unwrap();
    let rule = write(dir.path(), "rule.json", XOR_D1);
    let out = run(&["check", "--rule", rule.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["payload"]["status"], "violated");
    assert!(report["payload"]["witness"].is_array());
    assert!(report["payload"]["equation"].is_string());
}

#[test]
fn check_accepts_explicit_formulations() {
    let dir = tempfile::tempdir().unwrap();
    let rule = write(dir.path(), "rule.json", IDENTITY_D1);
    let out = run(&[
        "check",
        "--rule",
        rule.to_str().unwrap(),
        "--eta",
        "+1",
        "--lambda",
        "0,-1",
    ]);
    assert!(out.status.success());
}

#[test]
fn malformed_input_exits_two_with_error_code() {
    let dir = tempfile::tempdir().unwrap();
    let rule = write(dir.path(), "rule.json", r#"{"not": "a rule"}"#);
    let out = run(&["check", "--rule", rule.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report = stdout_json(&out);
    assert_eq!(report["error"]["code"], "parse");

    let missing = dir.path().join("missing.json");
    let out = run(&["check", "--rule", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&["check"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn enumerate_count_only_reports_the_count() {
    let out = run(&["enumerate", "--dim", "2", "--states", "0,1", "--count-only"]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["payload"]["count"], 9);
    assert_eq!(report["payload"]["label_counts"]["identity"], 1);
}

#[test]
fn enumerate_writes_catalog_files_whose_rules_check_conserving() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = dir.path().join("catalog.jsonl");
    let out = run(&[
        "enumerate",
        "--dim",
        "2",
        "--states",
        "0,1",
        "--out",
        catalog.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body = std::fs::read_to_string(&catalog).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines.len(), 10, "9 rules plus a summary line");
    let summary: Value = serde_json::from_str(lines[9]).unwrap();
    assert_eq!(summary["summary"]["count"], 9);

    // Re-ingest every rule through `check`: all conserving.
    for line in &lines[..9] {
        let mut rule: Value = serde_json::from_str(line).unwrap();
        rule.as_object_mut().unwrap().remove("labels");
        let path = write(dir.path(), "rule.json", &rule.to_string());
        let out = run(&["check", "--rule", path.to_str().unwrap()]);
        assert!(out.status.success(), "catalog rule must verify");
    }
}

#[test]
fn enumerate_streams_catalog_to_stdout_without_out_file() {
    let out = run(&["enumerate", "--dim", "1", "--states", "0,1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6, "5 rules plus a summary line");
}

#[test]
fn enumerate_is_deterministic_across_thread_counts() {
    let single = run(&[
        "enumerate", "--dim", "2", "--states", "0,1,2", "--threads", "1",
    ]);
    let multi = run(&[
        "enumerate", "--dim", "2", "--states", "0,1,2", "--threads", "2",
    ]);
    assert!(single.status.success() && multi.status.success());
    assert_eq!(single.stdout, multi.stdout);
}

#[test]
fn classify_names_rule_labels() {
    let dir = tempfile::tempdir().unwrap();
    let rule = write(dir.path(), "rule.json", IDENTITY_D1);
    let out = run(&["classify", "--rule", rule.to_str().unwrap()]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    let labels = report["payload"]["labels"].as_array().unwrap();
    assert!(labels.iter().any(|l| l == "identity"));

    let bad = write(dir.path(), "bad.json", XOR_D1);
    let out = run(&["classify", "--rule", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["error"]["code"], "not-conserving");
}

#[test]
fn simulate_tracks_sigma_and_writes_final_configuration() {
    let dir = tempfile::tempdir().unwrap();
    // Shift rule: the lone particle travels.
    let rule = write(
        dir.path(),
        "rule.json",
        r#"{"dimension":1,"states":[0,1],"kind":"dense","table":[0,0,0,0,1,1,1,1]}"#,
    );
    let config = write(
        dir.path(),
        "config.json",
        r#"{"shape":[5],"cells":[1,0,0,0,0]}"#,
    );
    let final_path = dir.path().join("final.json");
    let out = run(&[
        "simulate",
        "--rule",
        rule.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--steps",
        "3",
        "--out",
        final_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["payload"]["sigma"], serde_json::json!([1, 1, 1, 1]));
    let final_config: Value =
        serde_json::from_str(&std::fs::read_to_string(final_path).unwrap()).unwrap();
    assert_eq!(final_config["cells"], serde_json::json!([0, 0, 0, 1, 0]));
}

#[test]
fn oracle_modes_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", IDENTITY_D1);
    let bad = write(dir.path(), "bad.json", XOR_D1);

    let out = run(&[
        "oracle", "--rule", good.to_str().unwrap(), "--mode", "exhaustive", "--shape", "7",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["payload"]["status"], "conserving");

    let out = run(&[
        "oracle", "--rule", bad.to_str().unwrap(), "--mode", "finite-support",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let payload = &stdout_json(&out)["payload"];
    assert_eq!(payload["status"], "violated");
    assert!(payload["witness"]["cells"].is_array());

    let out = run(&[
        "oracle", "--rule", bad.to_str().unwrap(), "--mode", "sampled", "--shape", "6",
        "--samples", "500", "--seed", "11",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["payload"]["seed"], 11);

    // Over-budget exhaustive request: exit 2, distinguishable from a
    // violation.
    let out = run(&[
        "oracle", "--rule", good.to_str().unwrap(), "--mode", "exhaustive", "--shape", "7",
        "--budget", "16",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["error"]["code"], "budget-exceeded");
}

#[test]
fn convert_round_trips_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let rule = write(dir.path(), "rule.json", IDENTITY_D1);
    let parametric_path = dir.path().join("parametric.json");
    let out = run(&[
        "convert",
        "--rule",
        rule.to_str().unwrap(),
        "--to",
        "parametric",
        "--out",
        parametric_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let out = run(&[
        "convert",
        "--rule",
        parametric_path.to_str().unwrap(),
        "--to",
        "dense",
    ]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    let dense = report["payload"]["rule"].to_string();
    let original: Value = serde_json::from_str(IDENTITY_D1).unwrap();
    assert_eq!(
        serde_json::from_str::<Value>(&dense).unwrap()["table"],
        original["table"],
        "round trip must preserve the table bit for bit"
    );
}

#[test]
fn convert_rejects_non_conserving_rules_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let rule = write(dir.path(), "rule.json", XOR_D1);
    let out = run(&[
        "convert",
        "--rule",
        rule.to_str().unwrap(),
        "--to",
        "parametric",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let report = stdout_json(&out);
    assert_eq!(report["error"]["code"], "not-conserving");
    assert!(report["error"]["message"].as_str().unwrap().contains('['));
}

#[test]
fn reports_are_deterministic_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let rule = write(dir.path(), "rule.json", IDENTITY_D1);
    let mut payloads = Vec::new();
    for _ in 0..2 {
        let out = run(&["check", "--rule", rule.to_str().unwrap()]);
        let mut report = stdout_json(&out);
        report.as_object_mut().unwrap().remove("timing_ms");
        payloads.push(report);
    }
    assert_eq!(payloads[0], payloads[1]);
}
