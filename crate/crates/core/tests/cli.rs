//! The `ksctl` binary end to end: files, manifest and exit codes.

use std::path::Path;
use std::process::Command;

fn ksctl(out: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ksctl"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("KSSIM_THREADS", "2")
        .output()
        .unwrap()
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn profile_and_spectrum_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = ksctl(dir.path(), &["profile", "--cells", "800"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("profile.csv").exists());
    let m = manifest(dir.path());
    assert_eq!(m["command"], "profile");
    assert_eq!(m["config"]["grid"]["radial_cells"], 800);

    let o = ksctl(dir.path(), &["--mu", "2", "spectrum", "--modes", "0..1", "--cells", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("spectra.csv")).unwrap();
    assert!(csv.starts_with("# kssim-spectra v1\nm,deflated,re,im\n"));
    assert_eq!(manifest(dir.path())["config"]["model"]["mu"], 2.0);
}

#[test]
fn config_file_is_read_and_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 3\n[model]\nmu = 0.5\n[evolve]\nt_end = 0.2\n[grid]\nn = 32\nhalf_width = 8.0\n").unwrap();
    let o = ksctl(dir.path(), &["--config", cfg.to_str().unwrap(), "--seed", "5", "evolve", "--t-end", "0.5"]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(dir.path());
    assert_eq!(m["config"]["seed"], 5);
    assert_eq!(m["config"]["evolve"]["t_end"], 0.5);
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.lines().nth(1).unwrap().starts_with("t,l2k_g"));
}

#[test]
fn errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[model]\nmue = 1.0\n").unwrap();
    let o = ksctl(dir.path(), &["--config", cfg.to_str().unwrap(), "profile"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config schema error"));
    assert_eq!(ksctl(dir.path(), &["--eps", "-1", "profile"]).status.code(), Some(2));
    assert_eq!(ksctl(dir.path(), &["check", "99"]).status.code(), Some(2));
}

#[test]
fn failed_checks_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = ksctl(dir.path(), &["check", "5c"]);
    assert_eq!(o.status.code(), Some(1));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("[FAIL] 5c"), "{out}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("failed: criterion 5c"));
    assert!(dir.path().join("reports/acceptance.json").exists());
}
