use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qrd::io::{read_meta, RunStatus};

fn qrd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrd")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

/// Writes a config with the given source/target and extra fields into `dir`.
fn config(dir: &Path, name: &str, source: &str, target: &str, extra: &str) -> PathBuf {
    let path = dir.join(format!("{name}.json"));
    let text = format!(
        r#"{{"source":{source},"target":{target},"n":24,"output_dir":"{}","run_id":"{name}"{extra}}}"#,
        dir.display()
    );
    fs::write(&path, text).unwrap();
    path
}

const DISK: &str = r#"{"type":"disk","radius":1.0}"#;
const ELLIPSE: &str = r#"{"type":"ellipse","a":1.2,"b":0.8333333333333334}"#;

#[test]
fn distance_of_a_disk_to_itself_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(tmp.path(), "same", DISK, DISK, "");
    let out = qrd(&["distance", "--config", c.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let d: f64 = stdout.lines().last().unwrap().strip_prefix("distance ").unwrap().parse().unwrap();
    assert!(d.abs() <= 1e-6);
    assert!(tmp.path().join("same/trace.csv").exists());
    assert!(tmp.path().join("same/final.svg").exists());
}

#[test]
fn flow_stopped_by_max_steps_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(tmp.path(), "rand", DISK, DISK, r#","random_amplitude":0.15,"moser_tol":1e-3,"max_steps":2"#);
    let out = qrd(&["flow", "--config", c.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let meta = read_meta(&tmp.path().join("rand/meta.json")).unwrap();
    assert_eq!(meta.status, RunStatus::MaxSteps);

    let snap = tmp.path().join("rand/snapshots/final.csv");
    let resumed = qrd(&["flow", "--config", c.to_str().unwrap(), "--resume", snap.to_str().unwrap()]);
    assert_eq!(code(&resumed), 2);

    let energy = qrd(&["energy", "--snapshot", snap.to_str().unwrap(), "--config", c.to_str().unwrap()]);
    assert_eq!(code(&energy), 0);
    let text = String::from_utf8(energy.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "e_dirichlet,e_quad,k_integral,det_drift");
    assert!(lines[1].split(',').all(|v| v.parse::<f64>().is_ok()));

    let svg = tmp.path().join("map.svg");
    let render = qrd(&["render", "--snapshot", snap.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&render), 0, "{}", String::from_utf8_lossy(&render.stderr));
    assert!(fs::read_to_string(svg).unwrap().contains("<svg"));
}

#[test]
fn init_writes_a_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(tmp.path(), "ell", DISK, ELLIPSE, "");
    let out = qrd(&["init", "--config", c.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("ell/snapshots/initial.csv").exists());
}

#[test]
fn precondition_failures_exit_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let big = r#"{"type":"disk","radius":1.2}"#;
    let c = config(tmp.path(), "mismatch", DISK, big, "");
    assert_eq!(code(&qrd(&["distance", "--config", c.to_str().unwrap()])), 3);
    let meta = read_meta(&tmp.path().join("mismatch/meta.json")).unwrap();
    assert_eq!(meta.status, RunStatus::Failed);

    let broken = tmp.path().join("broken.json");
    fs::write(&broken, "{ not json").unwrap();
    assert_eq!(code(&qrd(&["flow", "--config", broken.to_str().unwrap()])), 3);
    assert_eq!(code(&qrd(&["flow"])), 3);
    assert_eq!(code(&qrd(&["render", "--snapshot", "/nonexistent/s.csv", "--out", "x.svg"])), 3);
    let valid = config(tmp.path(), "valid", DISK, DISK, "");
    let missing = qrd(&["energy", "--snapshot", "/nonexistent/s.csv", "--config", valid.to_str().unwrap()]);
    assert_eq!(code(&missing), 3);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/s.csv"));
    assert_eq!(code(&qrd(&["--help"])), 0);
}

#[test]
fn unreachable_moser_tolerance_is_a_solver_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config(tmp.path(), "strict", DISK, ELLIPSE, r#","moser_tol":1e-14"#);
    let out = qrd(&["init", "--config", c.to_str().unwrap()]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}
