use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn here() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

fn cases() -> Vec<Value> {
    let text = std::fs::read_to_string(here().join("golden/cases.json")).unwrap();
    serde_json::from_str::<Value>(&text).unwrap().as_array().unwrap().clone()
}

fn transcript(case: &Value) -> String {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_twisted"));
    cmd.arg(case["command"].as_str().unwrap());
    for f in case["inputs"].as_array().unwrap() {
        cmd.arg(here().join("fixtures").join(f.as_str().unwrap()));
    }
    for a in case["args"].as_array().unwrap() {
        cmd.arg(a.as_str().unwrap());
    }
    let out = cmd.stdin(std::process::Stdio::null()).output().unwrap();
    format!("exit: {}\n{}", out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn transcripts_match_golden_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut mismatched = Vec::new();
    for case in cases() {
        let name = case["name"].as_str().unwrap();
        let path = here().join("golden").join(format!("{name}.txt"));
        let got = transcript(&case);
        assert_eq!(got, transcript(&case), "{name} is not deterministic");
        if update {
            std::fs::write(&path, &got).unwrap();
        } else if std::fs::read_to_string(&path).ok().as_deref() != Some(got.as_str()) {
            mismatched.push(name.to_string());
        }
    }
    assert!(mismatched.is_empty(), "golden mismatch: {mismatched:?}");
}

#[test]
fn every_command_has_a_transcript() {
    let covered: Vec<String> = cases().iter().map(|c| c["command"].as_str().unwrap().to_string()).collect();
    for c in twisted_core::cli::COMMANDS {
        assert!(covered.iter().any(|x| x == c), "no golden case for {c}");
    }
}

#[test]
fn stdin_and_exit_codes() {
    let run = |args: &[&str], input: &str| {
        let mut child = Command::new(env!("CARGO_BIN_EXE_twisted"))
            .args(args)
            .stdin(std::process::Stdio::piped())
            .stdout(std::process::Stdio::piped())
            .spawn()
            .unwrap();
        use std::io::Write;
        child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
        let out = child.wait_with_output().unwrap();
        (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
    };
    let z2z = std::fs::read_to_string(here().join("fixtures/z_two_z.json")).unwrap();
    let (code, out) = run(&["homology"], &z2z);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v, serde_json::json!({"H": {"1": {"free": 0, "torsion": [2]}}}));
    assert_eq!(run(&["homology"], "{not json").0, 2);
    assert_eq!(run(&["homology"], r#"{"version":"1","kind":"complex","payload":{"ranks":[1,1],"d":{"0":[[1,2]]}}}"#).0, 2);
    assert_eq!(run(&["frobnicate"], "").0, 2);
}
