use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_parsynth"));
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("PARSYNTH_")) {
        c.env_remove(k);
    }
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(format!("{name}.dsl"))
}

fn scratch(file: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(file)
}

fn run(c: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = c.output().unwrap();
    (status.code().unwrap(), String::from_utf8(stdout).unwrap(), String::from_utf8(stderr).unwrap())
}

fn plan(name: &str) -> PathBuf {
    let out = scratch(&format!("{name}.plan.json"));
    let (code, _, err) = run(bin().arg("parallelize").arg(fixture(name)).arg("--out").arg(&out));
    assert!(code == 0 || code == 2, "{err}");
    out
}

#[test]
fn parallelize_writes_a_plan() {
    let (code, out, err) = run(bin().args(["parallelize", "--explain-lift"]).arg(fixture("mbbs")));
    assert_eq!(code, 0, "{err}");
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["kind"], "full-dc");
    assert_eq!(doc["aux"].as_array().unwrap().len(), 1);
    assert!(err.contains("aux sum_bsum"), "{err}");
}

#[test]
fn bp_is_map_only_with_one_auxiliary() {
    let (code, out, err) = run(bin().args(["parallelize", "--dump-normalization"]).arg(fixture("bp")));
    assert_eq!(code, 0, "{err}");
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["kind"], "map-only");
    assert_eq!(doc["aux"].as_array().unwrap().len(), 1);
}

#[test]
fn failed_plans_exit_with_two() {
    let (code, out, _) = run(bin().arg("parallelize").arg(fixture("lcs")));
    assert_eq!(code, 2);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["kind"], "failed");
}

#[test]
fn check_accepts_the_right_program_only() {
    let p = plan("sum");
    let (code, out, err) = run(bin().arg("check").arg(fixture("sum")).arg("--plan").arg(&p));
    assert_eq!(code, 0, "{out}{err}");
    assert!(out.contains("verified"));
    let (code, _, _) = run(bin().arg("check").arg(fixture("min_max")).arg("--plan").arg(&p));
    assert_eq!(code, 1);
}

#[test]
fn simulate_prints_the_result() {
    let p = plan("sum");
    let input = scratch("sum.input.json");
    std::fs::write(&input, r#"{"n": 3, "m": 2, "A": [[1, 2], [3, 4], [5, -6]]}"#).unwrap();
    let (code, out, err) = run(bin().args(["simulate", "--seed", "5", "--plan"]).arg(&p).arg("--input").arg(&input));
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.trim(), r#"{"s":9}"#);
}

#[test]
fn usage_errors_exit_with_three() {
    assert_eq!(run(bin().arg("frobnicate")).0, 3);
    assert_eq!(run(bin().arg("parallelize").arg(scratch("missing.dsl"))).0, 3);
    let bad = scratch("bad.dsl");
    std::fs::write(&bad, "input n: int;\nfor i in 0..n { x := 1; }\n").unwrap();
    assert_eq!(run(bin().arg("parallelize").arg(&bad)).0, 3);
}

#[test]
fn flags_come_from_the_environment() {
    let (code, out, _) = run(bin().env("PARSYNTH_SAMPLES", "50").arg("parallelize").arg(fixture("sum")));
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["provenance"]["random_samples"], 50);
}

#[test]
fn smoke_corpus_meets_expectations() {
    let (code, out, err) = run(bin().args(["corpus", "--subset", "smoke"]));
    assert_eq!(code, 0, "{out}{err}");
    assert!(!out.contains("MISMATCH"));
    assert!(out.lines().any(|l| l.starts_with("mbbs") && l.contains("FullDC")));
}
