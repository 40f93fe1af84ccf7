use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sparse_csi::cli::{EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sparse-csi"));
    c.env_remove("SPARSE_CSI_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const PHASE: &str = r#"{"geometry": {"antennas": 100}, "sweep": {"name": "N", "values": [10, 20, 30, 40, 50, 60, 70, 80, 90, 100]},
    "trials": 3, "noise_std": 0.0, "params": {"sparsity": 10, "alphas": [0.2, 0.8]}}"#;

fn phase_run(dir: &Path, cfg: &Path, out: &str, extra: &[&str]) -> (Output, PathBuf) {
    let out = dir.join(out);
    let mut args = vec!["phase-transition", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (run(&args), out)
}

#[test]
fn two_alpha_phase_config_writes_twenty_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pt.json", PHASE);
    let (o, out) = phase_run(dir.path(), &cfg, "pt.csv", &["--threads", "1"]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[0], "sweep_name");
    assert_eq!(header.len(), 10);
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| &r[0] == "N" && !r[6].is_empty()));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pt.json", PHASE);
    let (a, pa) = phase_run(dir.path(), &cfg, "a.csv", &["--threads", "1"]);
    let (b, pb) = phase_run(dir.path(), &cfg, "b.csv", &["--threads", "4"]);
    assert_eq!(a.status.code(), Some(EXIT_OK));
    assert_eq!(b.status.code(), Some(EXIT_OK));
    assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pt.json", PHASE);
    let (_, a) = phase_run(dir.path(), &cfg, "a.csv", &["--seed", "11"]);
    let (_, b) = phase_run(dir.path(), &cfg, "b.csv", &["--seed", "12"]);
    let a = std::fs::read_to_string(a).unwrap();
    let b = std::fs::read_to_string(b).unwrap();
    assert!(a.lines().nth(1).unwrap().ends_with(",11"));
    assert!(b.lines().nth(1).unwrap().ends_with(",12"));
}

#[test]
fn missing_config_flag_is_usage() {
    let o = run(&["phase-transition", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
    let o = run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
}

#[test]
fn unknown_sweep_parameter_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"sweep": {"name": "Q", "values": [1]}, "trials": 1}"#);
    let (o, out) = phase_run(dir.path(), &cfg, "x.csv", &[]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&o.stderr).contains('Q'));
    assert!(!out.exists());
}

#[test]
fn malformed_json_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", "{not json");
    let (o, _) = phase_run(dir.path(), &cfg, "x.csv", &[]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    let (o, _) = phase_run(dir.path(), &dir.path().join("absent.json"), "x.csv", &[]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn unwritable_output_is_runtime_error_without_partial_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pt.json", PHASE);
    let (o, out) = phase_run(dir.path(), &cfg, "missing/sub/x.csv", &[]);
    assert_eq!(o.status.code(), Some(EXIT_RUNTIME));
    assert!(!out.exists());
    assert!(!dir.path().join("missing").exists());
}

#[test]
fn pilots_subcommand_writes_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let o = run(&["pilots", "--scheme", "wbe", "--tau", "3", "--users", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::metadata(&out).unwrap().len() > 0);
    let o = run(&["pilots", "--scheme", "gwbe", "--tau", "0", "--out", out.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(EXIT_OK));
}
