use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn matcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matcheck"))
        .current_dir(root())
        .env_remove("MATCHECK_LIB")
        .env("NO_COLOR", "1")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn demos_check_clean() {
    for d in ["demo/env_node.mat.json", "demo/gps_logger.mat.json"] {
        let out = matcheck(&["--lib", "demo/blocks", "check", d]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn lib_falls_back_to_env() {
    let out = Command::new(env!("CARGO_BIN_EXE_matcheck"))
        .current_dir(root())
        .env("MATCHECK_LIB", "demo/blocks")
        .args(["check", "demo/env_node.mat.json"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn errors_exit_one() {
    let out = matcheck(&["--lib", "fixtures/blocks", "--format", "json", "check", "fixtures/catalog/e006.mat.json"]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    assert_eq!(v["diagnostics"][0]["code"], "E006");
    assert_eq!(v["errors"], 1);
}

#[test]
fn deny_warnings() {
    let args = ["--lib", "fixtures/blocks", "check", "fixtures/catalog/w103.mat.json"];
    assert_eq!(code(&matcheck(&args)), 0);
    let mut strict = args.to_vec();
    strict.push("--deny-warnings");
    assert_eq!(code(&matcheck(&strict)), 1);
}

#[test]
fn validate_reports_format_errors() {
    let out = matcheck(&["validate", "fixtures/blocks/mcu33.block.json"]);
    assert_eq!(code(&out), 0);
    let out = matcheck(&["--format", "json", "validate", "fixtures/parse/dangling_net.block.json"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["files"][0]["diagnostics"][0]["code"], "P003");
}

#[test]
fn input_failures_exit_two() {
    assert_eq!(code(&matcheck(&["--lib", "fixtures/blocks", "check", "missing.mat.json"])), 2);
    let out = matcheck(&["--lib", "fixtures/bad_lib", "check", "demo/env_node.mat.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("P003"));
    let out = matcheck(&["--lib", "fixtures/blocks", "check", "fixtures/parse/rail_cycle.mat.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn resolve_errors_exit_one() {
    let out = matcheck(&["--lib", "fixtures/blocks", "--format", "json", "check", "fixtures/parse/unknown_block.mat.json"]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    assert_eq!(v["stage"], "resolve");
    assert_eq!(v["diagnostics"][0]["code"], "R001");
}

#[test]
fn refused_merge_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("out.flat.json");
    let bom = dir.path().join("out.csv");
    let out = matcheck(&[
        "--lib",
        "fixtures/blocks",
        "merge",
        "fixtures/catalog/e001.mat.json",
        "-o",
        flat.to_str().unwrap(),
        "--bom",
        bom.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(!flat.exists() && !bom.exists());
}

#[test]
fn merge_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for i in 0..3 {
        let flat = dir.path().join(format!("{i}.json"));
        let bom = dir.path().join(format!("{i}.csv"));
        let out = matcheck(&[
            "--lib",
            "demo/blocks",
            "merge",
            "demo/env_node.mat.json",
            "-o",
            flat.to_str().unwrap(),
            "--bom",
            bom.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        outputs.push((std::fs::read(&flat).unwrap(), std::fs::read(&bom).unwrap()));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let v: Value = serde_json::from_slice(&outputs[0].0).unwrap();
    assert_eq!(v["design"], "env_node");
}

#[test]
fn explain_codes() {
    let out = matcheck(&["--format", "json", "explain", "E005"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["code"], "E005");
    assert!(v["explanation"].as_str().unwrap().contains("address"));
    assert_eq!(code(&matcheck(&["explain", "E999"])), 1);
}

#[test]
fn shadowing_is_reported_on_stderr() {
    let out = matcheck(&["--lib", "fixtures/blocks", "--lib", "demo/blocks", "--format", "json", "check", "demo/env_node.mat.json"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("shadows"));
    assert_eq!(json(&out)["ok"], true);
}
