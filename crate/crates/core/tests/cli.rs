//! End-to-end runs of the `scatter` binary on small grids.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn scatter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scatter"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    lines
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(scatter(&["--help"]).status.code(), Some(0));
    assert_eq!(scatter(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(scatter(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(scatter(&["dataset", "--n", "abc"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    assert_eq!(scatter(&["dataset", "--n", "4", "--out", &out]).status.code(), Some(1));
    let cfg = write_config(dir.path(), "[grid]\nbogus = 3\n");
    assert_eq!(scatter(&["dataset", "--config", &cfg, "--out", &out]).status.code(), Some(1));
}

#[test]
fn zero_potential_dataset_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "directions = 8\n[grid]\nn = 13\n[potential]\nfamily = \"zero\"\n");
    let out = dir.path().join("out");
    let o = scatter(&["dataset", "--config", &cfg, "--k", "2,5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&out.join("dataset.csv"));
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r[8] == 0.0 && r[9] == 0.0));
}

#[test]
fn dataset_is_deterministic_and_hash_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "directions = 8\n[grid]\nn = 13\n[potential]\nsupport_r = 0.6\n");
    let run = |name: &str, k: &str| {
        let out = dir.path().join(name);
        let o = scatter(&["dataset", "--config", &cfg, "--k", k, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out.join("dataset.csv")).unwrap()
    };
    let a = run("a", "3");
    let b = run("b", "3");
    let c = run("c", "4");
    assert_eq!(a, b);
    let first_line = |v: &[u8]| String::from_utf8_lossy(v).lines().next().unwrap().to_string();
    assert_ne!(first_line(&a), first_line(&c));
}

#[test]
fn forward_writes_potential_and_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fwd");
    let o = scatter(&["forward", "--n", "13", "--k", "3", "--amplitude", "0.05", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("potential.bin").exists());
    assert_eq!(fs::metadata(out.join("potential.bin")).unwrap().len(), 8 * 13 * 13 * 13);
    let text = fs::read_to_string(out.join("forward.csv")).unwrap();
    assert!(text.lines().nth(2).unwrap().contains(",true,"));
    assert!(out.join("config.json").exists());
}

#[test]
fn selected_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "checks = [1]\ndirections = 8\n[grid]\nn = 13\n");
    let out = dir.path().join("chk");
    let o = scatter(&["all-checks", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[PASS]"));
}

#[test]
fn failing_check_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "checks = [9]\ndirections = 16\n[grid]\nn = 25\n");
    let out = dir.path().join("chk");
    let o = scatter(&["all-checks", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL]"));
    assert!(out.join("checks.json").exists());
}
