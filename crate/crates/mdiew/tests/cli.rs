//! End-to-end runs of the command-line binary against real files,
//! including the documented exit codes.

use mdiew::pipeline::TableFile;
use std::path::Path;
use std::process::{Command, Output};

fn mdiew(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdiew"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn simulate_quantify_evaluate_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let out = mdiew(dir.path(), &["simulate", "--werner", "0.94"]);
    assert_success(&out);
    assert!(dir.path().join("table.json").exists());

    let out = mdiew(dir.path(), &["quantify", "--table", "table.json"]);
    assert_success(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("nu* = 0.455000"), "stdout: {text}");
    assert!(dir.path().join("witness.json").exists());
    assert!(dir.path().join("report.json").exists());

    let out = mdiew(
        dir.path(),
        &["witness-eval", "--witness", "witness.json", "table.json"],
    );
    assert_success(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("value = 0.455000"));
    assert!(dir.path().join("records.json").exists());
}

#[test]
fn counts_route_reports_slocc_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = mdiew(
        dir.path(),
        &[
            "simulate",
            "--werner",
            "0.94",
            "--shots",
            "5000",
            "--seed",
            "42",
            "--out-counts",
            "counts.json",
        ],
    );
    assert_success(&out);
    let out = mdiew(dir.path(), &["quantify", "--counts", "counts.json"]);
    assert_success(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("SLOCC lower bound"));
}

#[test]
fn inconsistent_data_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&mdiew(dir.path(), &["simulate", "--werner", "0.94"]));
    let path = dir.path().join("table.json");
    let mut file: TableFile =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let bumped = file.table.get(1, 1, 0, 0) + 0.4;
    file.table.set(1, 1, 0, 0, bumped);
    std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();

    let out = mdiew(
        dir.path(),
        &["quantify", "--table", "table.json", "--no-regularize"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn digest_mismatch_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&mdiew(dir.path(), &["simulate", "--werner", "0.94"]));
    assert_success(&mdiew(dir.path(), &["quantify", "--table", "table.json"]));

    let path = dir.path().join("table.json");
    let mut file: TableFile =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    file.scenario_digest = "0".repeat(64);
    std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();

    let out = mdiew(
        dir.path(),
        &["witness-eval", "--witness", "witness.json", "table.json"],
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn malformed_file_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("table.json"), "{ not json").unwrap();
    let out = mdiew(dir.path(), &["quantify", "--table", "table.json"]);
    assert_eq!(out.status.code(), Some(4));
}
