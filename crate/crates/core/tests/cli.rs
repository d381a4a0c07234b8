use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn balance_mpc(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_balance-mpc"))
        .args(args)
        .output()
        .expect("binary runs");
    Output {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn compiled(dir: &TempDir, name: &str, spec: &str) -> PathBuf {
    let spec = write(dir, &format!("{name}.spec.json"), spec);
    let plan = dir.path().join(format!("{name}.plan.json"));
    let out = balance_mpc(&["compile", "--spec", s(&spec), "--out", s(&plan)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    plan
}

const XOR3: &str = r#"{"type":"symmetric","n":3,"x_set":[1,3]}"#;

#[test]
fn compile_xor3_uses_three_bags_and_two_comparisons() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "xor3.json", XOR3);
    let plan = dir.path().join("plan.json");
    let out = balance_mpc(&["compile", "--spec", s(&spec), "--out", s(&plan)]);
    assert_eq!(out.code, 0);
    assert!(
        out.stdout.contains("protocol: p3_symmetric"),
        "{}",
        out.stdout
    );
    assert!(
        out.stdout.contains("bags=3 comparisons=2"),
        "{}",
        out.stdout
    );
    assert!(out.stdout.contains("note: uses a pen"), "{}", out.stdout);
    let doc: Value = serde_json::from_str(&fs::read_to_string(&plan).unwrap()).unwrap();
    assert_eq!(doc["resources"]["bags"], 3);
    assert_eq!(doc["resources"]["comparisons_max"], 2);
    assert_eq!(doc["notes"], serde_json::json!(["uses a pen"]));
}

#[test]
fn compile_threshold_notes_custom_weight() {
    let dir = TempDir::new().unwrap();
    let plan = compiled(&dir, "maj", r#"{"type":"threshold","n":3,"k":2}"#);
    let doc: Value = serde_json::from_str(&fs::read_to_string(&plan).unwrap()).unwrap();
    assert_eq!(doc["kind"], "p2_threshold");
    assert_eq!(doc["notes"], serde_json::json!(["uses a custom weight"]));
}

#[test]
fn compile_rejects_invalid_specs() {
    let dir = TempDir::new().unwrap();
    for (text, needle) in [
        (r#"{"type":"threshold","n":3,"k":0}"#, "1 <= k <= n"),
        (r#"{"type":"and","n":0}"#, "at least 1"),
        (
            r#"{"type":"truth_table","n":2,"ones":["011"]}"#,
            "exactly 2",
        ),
        (r#"{"type":"symmetric","n":3}"#, "requires field `x_set`"),
        ("not json", "expected ident"),
    ] {
        let spec = write(&dir, "bad.json", text);
        let plan = dir.path().join("plan.json");
        let out = balance_mpc(&["compile", "--spec", s(&spec), "--out", s(&plan)]);
        assert_eq!(out.code, 2, "{text}");
        assert!(out.stderr.contains(needle), "{text}: {}", out.stderr);
        assert!(!plan.exists());
    }
    let out = balance_mpc(&["compile", "--spec", "/nonexistent.json", "--out", "x.json"]);
    assert_eq!(out.code, 2);
}

#[test]
fn run_and_plan() {
    let dir = TempDir::new().unwrap();
    let plan = compiled(&dir, "and", r#"{"type":"and","n":2}"#);
    let out = balance_mpc(&["run", "--plan", s(&plan), "--inputs", "11"]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout, "view: [balanced]\noutput: 1\n");
    let out = balance_mpc(&["run", "--plan", s(&plan), "--inputs", "10"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.ends_with("output: 0\n"), "{}", out.stdout);
}

#[test]
fn run_xor3_on_two_ones_is_zero_for_every_seed() {
    let dir = TempDir::new().unwrap();
    let plan = compiled(&dir, "xor3", XOR3);
    for seed in 0..20u64 {
        let seed = seed.to_string();
        let out = balance_mpc(&[
            "run",
            "--plan",
            s(&plan),
            "--inputs",
            "110",
            "--seed",
            &seed,
        ]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.ends_with("output: 0\n"), "{}", out.stdout);
    }
}

#[test]
fn run_rejects_bad_inputs() {
    let dir = TempDir::new().unwrap();
    let plan = compiled(&dir, "and", r#"{"type":"and","n":2}"#);
    for inputs in ["1", "111", "1x", ""] {
        let out = balance_mpc(&["run", "--plan", s(&plan), "--inputs", inputs]);
        assert_eq!(out.code, 2, "{inputs:?}");
        assert!(out.stderr.starts_with("error:"), "{}", out.stderr);
    }
}

#[test]
fn trace_document_hides_randomness_by_default() {
    let dir = TempDir::new().unwrap();
    let plan = compiled(&dir, "xor3", XOR3);
    let public = dir.path().join("public.json");
    let hidden = dir.path().join("hidden.json");
    let base = ["run", "--plan", s(&plan), "--inputs", "100", "--seed", "7"];
    let out = balance_mpc(&[&base[..], &["--out", s(&public)]].concat());
    assert_eq!(out.code, 0);
    let out = balance_mpc(&[&base[..], &["--reveal-randomness", "--out", s(&hidden)]].concat());
    assert_eq!(out.code, 0);

    let public: Value = serde_json::from_str(&fs::read_to_string(public).unwrap()).unwrap();
    let hidden: Value = serde_json::from_str(&fs::read_to_string(hidden).unwrap()).unwrap();
    assert!(public.get("hidden").is_none());
    assert_eq!(public["output"], 1);
    assert_eq!(public["view"], hidden["view"]);
    assert_eq!(hidden["hidden"]["inputs"], "100");
    assert_eq!(hidden["hidden"]["seed"], 7);
    assert!(!hidden["hidden"]["transcript"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn verify_xor3_all_modes_passes() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "xor3.json", XOR3);
    let report = dir.path().join("report.json");
    let out = balance_mpc(&[
        "verify",
        "--spec",
        s(&spec),
        "--mode",
        "all",
        "--out",
        s(&report),
    ]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    assert_eq!(out.stdout.lines().count(), 3, "{}", out.stdout);
    assert!(out.stdout.lines().all(|l| l.contains(": pass")));
    let doc: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["protocol"], "p3_symmetric");
    assert_eq!(doc["reports"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_each_mode_alone() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "xor3.json", XOR3);
    for mode in ["correctness", "security", "resources"] {
        let out = balance_mpc(&["verify", "--spec", s(&spec), "--mode", mode]);
        assert_eq!(out.code, 0, "{mode}: {}", out.stdout);
        assert_eq!(out.stdout.lines().count(), 1, "{}", out.stdout);
    }
    let out = balance_mpc(&["verify", "--spec", s(&spec), "--mode", "fast"]);
    assert_eq!(out.code, 2);
}

#[test]
fn verify_detects_corrupted_custom_weight() {
    let dir = TempDir::new().unwrap();
    let spec_text = r#"{"type":"threshold","n":3,"k":2}"#;
    let spec = write(&dir, "maj.json", spec_text);
    let plan = compiled(&dir, "maj", spec_text);
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&plan).unwrap()).unwrap();
    let offset = doc["custom_weight"]["half_delta_units"].as_i64().unwrap();
    doc["custom_weight"]["half_delta_units"] = Value::from(offset - 2);
    let mutated = write(&dir, "mutated.json", &doc.to_string());

    let out = balance_mpc(&[
        "verify",
        "--spec",
        s(&spec),
        "--plan",
        s(&mutated),
        "--mode",
        "correctness",
    ]);
    assert_eq!(out.code, 1, "{}", out.stdout);
    assert!(out.stdout.contains("FAIL"), "{}", out.stdout);
    assert!(
        out.stdout
            .contains("counterexample: {\"type\":\"wrong_output\""),
        "{}",
        out.stdout
    );
}

#[test]
fn verify_constant_zero_table_needs_no_comparisons() {
    let dir = TempDir::new().unwrap();
    let spec_text = r#"{"type":"truth_table","n":3,"ones":[]}"#;
    let spec = write(&dir, "zero.json", spec_text);
    let out = balance_mpc(&["verify", "--spec", s(&spec), "--mode", "all"]);
    assert_eq!(out.code, 0, "{}", out.stdout);

    let plan = compiled(&dir, "zero", spec_text);
    let out = balance_mpc(&["audit", "--plan", s(&plan)]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    assert!(out.stdout.contains("comparisons=0"), "{}", out.stdout);
}

#[test]
fn audit_flags_understated_resources() {
    let dir = TempDir::new().unwrap();
    let plan = compiled(&dir, "xor3", XOR3);
    let out = balance_mpc(&["audit", "--plan", s(&plan)]);
    assert_eq!(out.code, 0, "{}", out.stdout);

    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&plan).unwrap()).unwrap();
    doc["resources"]["comparisons_max"] = Value::from(1);
    let tampered = write(&dir, "tampered.json", &doc.to_string());
    let out = balance_mpc(&["audit", "--plan", s(&tampered)]);
    assert_eq!(out.code, 1, "{}", out.stdout);
    assert!(out.stdout.contains("counterexample"), "{}", out.stdout);
}

#[test]
fn usage_errors_exit_two_and_help_exits_zero() {
    assert_eq!(balance_mpc(&[]).code, 2);
    assert_eq!(balance_mpc(&["frobnicate"]).code, 2);
    assert_eq!(balance_mpc(&["run", "--inputs", "1"]).code, 2);
    let help = balance_mpc(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("compile"));
}
