//! End-to-end checks of the `stergm` binary: exit codes, the one-line
//! machine-parsable error format, and a fixture-to-outputs round trip.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stergm"))
}

fn fixture(dir: &Path, periods: u32) -> std::path::PathBuf {
    let out = dir.join("fixture");
    let status = bin()
        .args([
            "synth",
            "--out-dir",
            out.to_str().unwrap(),
            "--actors",
            "10",
            "--periods",
            &periods.to_string(),
            "--seed",
            "5",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    out
}

#[test]
fn synth_then_ingest_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let fixture_dir = fixture(dir.path(), 8);
    let out = dir.path().join("ingest");
    let output = bin()
        .args([
            "ingest",
            "--config",
            fixture_dir.join("config.json").to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(out.join("panel_summary.csv").exists());
    assert!(out.join("provenance.json").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn missing_input_file_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args([
            "ingest",
            "--edges",
            "/nonexistent/edges.csv",
            "--monadic",
            "/nonexistent/monadic.csv",
            "--dyadic",
            "/nonexistent/dyadic.csv",
            "--registry",
            "/nonexistent/registry.csv",
            "--out-dir",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr.lines().last().unwrap();
    let parsed: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(parsed["error"]["class"], "input");
}

#[test]
fn insufficient_evaluation_horizon_exits_with_contract_error() {
    let dir = tempfile::tempdir().unwrap();
    let fixture_dir = fixture(dir.path(), 8);
    let output = bin()
        .args([
            "evaluate",
            "--config",
            fixture_dir.join("config.json").to_str().unwrap(),
            "--out-dir",
            dir.path().join("eval").to_str().unwrap(),
            "--start",
            "2",
            "--end",
            "3",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr.lines().last().unwrap();
    let parsed: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(parsed["error"]["class"], "contract");
    assert!(parsed["error"]["message"]
        .as_str()
        .unwrap()
        .contains("insufficient horizon"));
}
