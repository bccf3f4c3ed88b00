use std::path::Path;
use std::process::{Command, Output};

use bdlab::Manifest;

fn bdlab(args: &[&str], out: &Path, workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bdlab"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(w) = workers {
        cmd.env("BDLAB_WORKERS", w);
    }
    cmd.output().expect("spawn bdlab")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn rates_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = bdlab(
        &["rates", "--theta", "10", "--a", "1", "--r", "1", "--rho", "1", "--gamma-grid", "0:4:0.5", "--kappa-grid", "0:2:0.5"],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("rates.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("gamma,kappa,delta,lambda_bar,growth_rate"));
    assert_eq!(lines.count(), 9 * 5);
    // γ = κ = 0 gives E⁻ at λ = 0, (7 − √5)/2 at P0
    let first: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((first[2] - (7.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
    let m = Manifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.command, "rates");
    assert_eq!(m.outputs, vec!["rates.csv".to_string()]);
    assert_eq!(m.config.get("model.rho"), Some("1"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bdlab(&["rates", "--no-such-flag"], dir.path(), None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn invalid_parameters_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = bdlab(&["rates", "--theta", "4"], dir.path(), None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let out = Command::new(env!("CARGO_BIN_EXE_bdlab")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn closed_form_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bdlab(&["verify", "--suite", "closed-form"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let summary = read(&dir.path().join("summary.txt"));
    assert!(summary.contains("legendre_round_trips"));
    assert!(summary.ends_with("overall: PASS\n"));
    assert!(read(&dir.path().join("report.csv")).starts_with("suite,criterion,check,measured,threshold,status"));
}

#[test]
fn small_oracle_suite_is_flagged_underpowered() {
    let dir = tempfile::tempdir().unwrap();
    let out = bdlab(&["verify", "--suite", "oracle", "--replicas", "10"], dir.path(), None);
    assert!(matches!(out.status.code(), Some(0) | Some(3)));
    assert!(String::from_utf8_lossy(&out.stdout).contains("underpowered"));
}

#[test]
fn unknown_suite_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bdlab(&["verify", "--suite", "nope"], dir.path(), None).status.code(), Some(1));
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let args = ["simulate", "--set", "sim.t=1.5", "--set", "sim.snapshots=0.5,1.5", "--replicas", "12", "--seed", "7"];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(bdlab(&args, a.path(), Some("1")).status.code(), Some(0));
    assert_eq!(bdlab(&args, b.path(), Some("3")).status.code(), Some(0));
    for f in ["snapshots.csv", "growth.csv"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
}

#[test]
fn cap_exhaustion_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bdlab(&["simulate", "--set", "sim.cap=5", "--set", "sim.t=3", "--replicas", "4"], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
    let m = Manifest::read(&dir.path().join("manifest.json")).unwrap();
    assert!(m.truncated_replicas > 0);
    assert_eq!(m.status, 2);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "model.rho=0.1\nbd.schedule=constant\nbd.birth=0\nbd.death=0.7\nbd.tau=2\n").unwrap();
    let out = bdlab(&["birthdeath", "--config", cfg.to_str().unwrap(), "--set", "bd.death=0"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(&dir.path().join("outcome.json"))).unwrap();
    // no births and no deaths: one particle survives
    assert_eq!(v["mean"].as_f64(), Some(1.0));
    let m = Manifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.config.get("bd.death"), Some("0"));
    assert_eq!(m.config.get("model.rho"), Some("0.1"));
}

#[test]
fn every_command_writes_a_manifest() {
    for args in [
        vec!["paths", "--set", "paths.points=11"],
        vec!["martingale", "--set", "sim.t=1", "--replicas", "3"],
        vec!["spine", "--replicas", "20", "--set", "spine.tau=0.3"],
        vec!["birthdeath", "--replicas", "200"],
        vec!["oracle", "--replicas", "50", "--set", "oracle.drift_t=2"],
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = bdlab(&args, dir.path(), None);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let m = Manifest::read(&dir.path().join("manifest.json")).unwrap();
        for f in &m.outputs {
            assert!(dir.path().join(f).exists(), "{args:?}: {f}");
        }
    }
}
