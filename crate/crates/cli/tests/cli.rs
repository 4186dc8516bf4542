//! Binary-level tests: subcommand output, config handling, and the
//! determinism of two real `semra sweep` executions.

use std::path::Path;
use std::process::Command;

fn semra() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semra"))
}

fn small_sweep_args(out: &Path) -> Vec<String> {
    [
        "sweep",
        "--config",
        "tests/fixtures/small_sweep.toml",
        "--out",
        out.to_str().unwrap(),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn sweep_is_bitwise_deterministic_across_executions() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");

    let status = semra().args(small_sweep_args(&first)).status().unwrap();
    assert!(status.success());
    let status = semra().args(small_sweep_args(&second)).status().unwrap();
    assert!(status.success());

    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "two sweep executions must produce identical bytes");
}

#[test]
fn run_emits_one_row_per_sentence() {
    let output = semra()
        .args(["run", "--config", "tests/fixtures/small_sweep.toml", "--snr", "20", "--seed", "3"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("sentence,"));
    assert_eq!(lines.len(), 1 + 12, "header plus one row per sentence:\n{text}");
}

#[test]
fn hist_counts_sum_to_corpus_size() {
    let output = semra()
        .args(["hist", "--config", "tests/fixtures/small_sweep.toml"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let total: usize = text
        .lines()
        .skip(1)
        .map(|line| line.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 12);
}

#[test]
fn trace_requires_relaxation_solver() {
    let output = semra()
        .args(["trace", "--config", "tests/fixtures/small_sweep.toml", "--solver", "greedy"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("dual_ascent"), "{stderr}");
}

#[test]
fn trace_emits_iteration_series() {
    let output = semra()
        .args(["trace", "--config", "tests/fixtures/small_sweep.toml", "--solver", "kkt"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.starts_with("iteration,objective,dual_value,residual,step"));
    assert!(text.lines().count() > 1);
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[sweep]\nsnrs_db = []\n").unwrap();
    let output = semra().args(["sweep", "--config", path.to_str().unwrap()]).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("snrs_db"));
}

#[test]
fn unwritable_output_fails_before_compute() {
    let output = semra()
        .args([
            "sweep",
            "--config",
            "tests/fixtures/small_sweep.toml",
            "--out",
            "/nonexistent-dir/out.csv",
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("cannot write"));
}
