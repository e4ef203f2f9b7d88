//! End-to-end tests of the binary: subcommands, exit codes, file outputs.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qrnn-bench"))
}

fn tiny_protocol_config(out: &Path) -> String {
    format!(
        "\
dataset = mackey-glass
horizon = 1
methods = gradient,cmaes,hybrid
runs = 1
seed = 3
loss = multi-step
grad = fd
gradient-epochs = 1
cmaes-generations = 1
hybrid-gradient-epochs = 1
hybrid-evo-generations = 1
out = {}
",
        out.display()
    )
}

#[test]
fn help_exits_zero() {
    let status = bin().arg("--help").status().unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let status = bin().args(["run", "--frobnicate"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn bad_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.conf");
    std::fs::write(&config, "no-such-key = 1\n").unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(&config)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn csv_dataset_without_path_is_a_usage_error() {
    let status = bin().args(["run", "--dataset", "csv"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn unknown_csv_column_is_a_runtime_failure_naming_the_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("series.csv");
    std::fs::write(&csv, "value\n1\n2\n3\n").unwrap();
    let output = bin()
        .args(["run", "--dataset", "csv", "--column", "nope"])
        .arg("--csv")
        .arg(&csv)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("nope"), "stderr should name the column: {stderr}");
}

#[test]
fn gen_mg_writes_a_loadable_series() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mg.csv");
    let status = bin()
        .args(["gen-mg", "--points", "120", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let values: Vec<f64> = qrnn_core::data::load_csv(&path, "value").unwrap();
    assert_eq!(values.len(), 120);
    assert_eq!(values[0], 1.2);
    assert!(values.iter().all(|v| v.is_finite()));
}

#[test]
fn gen_mg_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mg.csv");
    let status = bin()
        .args(["gen-mg", "--points", "10", "--tau", "17.05", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn run_emits_all_output_files_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let config_path = dir.path().join("bench.conf");
        std::fs::write(&config_path, tiny_protocol_config(out)).unwrap();
        let status = bin()
            .args(["run", "--config"])
            .arg(&config_path)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        for name in ["curves.csv", "summary.csv", "records.csv", "config.echo"] {
            assert!(out.join(name).exists(), "{name} missing");
        }
        let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 1 + 3, "one row per method");
    }
    for name in ["curves.csv", "summary.csv", "records.csv"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} not reproducible");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flagged");
    let config_path = dir.path().join("bench.conf");
    // file says seed 3; flag overrides to 4 and must land in config.echo
    std::fs::write(&config_path, tiny_protocol_config(&out)).unwrap();
    let status = bin()
        .args(["run", "--seed", "4", "--config"])
        .arg(&config_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let echo = std::fs::read_to_string(out.join("config.echo")).unwrap();
    assert!(echo.contains("seed = 4"), "echo should carry the flag value:\n{echo}");
}
