//! End-to-end runs of the `ffsched` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ffsched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffsched"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let s = scenario("default.toml");
    let o = ffsched(&[
        "run",
        "--scenario",
        path(&s),
        "--mode",
        "ideal",
        "--seed",
        "3",
        "--horizon",
        "1",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("mode = ideal"));
    let csv = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(csv.starts_with("time_s,h_tau1,h_tau2,h_tau3,u_hat,eta,"));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("deadline_misses_tau2 = "));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut traces = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = ffsched(&["run", "--r", "0.1", "--horizon", "1", "--out", path(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        traces.push(fs::read(out.join("trace.csv")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn table_diff_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = ffsched(&["table", "--compile", "--diff", "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        fs::metadata(dir.path().join("table_diff.txt"))
            .unwrap()
            .len()
            > 0
    );
}

#[test]
fn sweep_reports_every_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = ffsched(&[
        "sweep",
        "--noise-sweep",
        "--seeds",
        "2",
        "--horizon",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 4 * 2);
    assert!(dir.path().join("r0.1_seed2").join("trace.csv").exists());
}

#[test]
fn failures_carry_category_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[noise\n").unwrap();
    let o = ffsched(&["run", "--scenario", path(&bad), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error[config-syntax]"));

    fs::write(
        &bad,
        "[[segment]]\nstart = 0.0\nend = 3.0\ntau1 = 1e-3\ntau2 = 1e-3\ntau3 = 1e-3\n",
    )
    .unwrap();
    let o = ffsched(&["run", "--scenario", path(&bad), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("execution-time schedule gap"));

    let missing = dir.path().join("missing.toml");
    let o = ffsched(&["run", "--scenario", path(&missing), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(8));
    assert!(stderr(&o).starts_with("error[io]"));

    let o = ffsched(&["run", "--mode", "sideways", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
}
