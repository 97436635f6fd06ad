use std::path::PathBuf;
use std::process::{Command, Output};

use froblab_cli::{load_toric_config, regression_suite, CliError, Perturbation};
use froblab_core::toric::ToricError;
use serde_json::Value;

fn froblab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_froblab")).args(args).output().expect("binary runs")
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("froblab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const CONIFOLD: &str = include_str!("../../../configs/conifold.cfg");

#[test]
fn cp1_report_contains_minus_one_24th() {
    let out = froblab(&["run", "cp1", "--order", "6", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ok"], true);
    assert_eq!(v["order"], 6);
    assert!(String::from_utf8_lossy(&out.stdout).contains("-1/24"));
}

#[test]
fn conifold_coefficients() {
    let out = froblab(&["run", "conifold", "--order", "8"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let cs: Vec<&str> = v["results"]["dg"]["dlog_q_coefficients"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert_eq!(cs, ["1/8", "1/12", "1/12", "1/12", "1/12", "1/12", "1/12", "1/12"]);
}

#[test]
fn unknown_example_exits_nonzero() {
    let out = froblab(&["run", "nosuch"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown example `nosuch`"));
}

#[test]
fn reports_are_byte_identical() {
    for args in [&["run", "conifold", "--order", "5"][..], &["run", "a3-numeric", "--format", "text"], &["suite", "--order", "4"]] {
        let a = froblab(args);
        let b = froblab(args);
        assert_eq!(a.stdout, b.stdout, "{:?}", args);
    }
}

#[test]
fn every_bundled_example_passes() {
    for (name, _) in froblab_cli::EXAMPLES {
        let out = froblab(&["run", name, "--format", "text"]);
        assert!(out.status.success(), "{}: {}", name, String::from_utf8_lossy(&out.stdout));
        assert!(String::from_utf8_lossy(&out.stdout).contains("ok = true"));
    }
}

#[test]
fn out_path_and_config_path() {
    let cfg = scratch("cp1.cfg", include_str!("../../../configs/cp1.cfg"));
    let dest = cfg.with_extension("json");
    let out = froblab(&["run", "--config", cfg.to_str().unwrap(), "--out", dest.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(v["schema"], "froblab-report/1");
}

#[test]
fn hbar_window_accepts_negative_lower_bound() {
    let out = froblab(&["run", "dm-flow-demo", "--hbar-window", "-2:0", "--format", "text"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bad = froblab(&["run", "cp1", "--hbar-window", "2:1"]);
    assert!(!bad.status.success());
}

#[test]
fn bundled_conifold_loads() {
    let p = scratch("conifold.cfg", CONIFOLD);
    let d = load_toric_config(&p).unwrap();
    assert_eq!(d.m, vec![vec![1, 1]]);
    assert_eq!(d.l, vec![vec![1, 1]]);
    assert_eq!(d.c1_pairing(&[1]), 0);
}

#[test]
fn malformed_row_is_a_schema_error() {
    let p = scratch("bad-row.cfg", &CONIFOLD.replace("l = 1, 1", "l = 1, 1, 1"));
    match load_toric_config(&p) {
        Err(CliError::Schema(e)) => {
            assert_eq!(e.path, "toric.l");
            assert!(e.to_string().contains("expected 2"), "{}", e);
        }
        other => panic!("{:?}", other.map(|_| ())),
    }
}

#[test]
fn negative_first_chern_pairing_is_rejected_at_load() {
    let p = scratch("negative.cfg", &CONIFOLD.replace("l = 1, 1", "l = 2, 1"));
    match load_toric_config(&p) {
        Err(CliError::Toric(ToricError::NonNegativityViolated(_))) => {}
        other => panic!("{:?}", other.map(|_| ())),
    }
}

#[test]
fn schema_errors_carry_line_numbers() {
    let p = scratch("typo.cfg", &CONIFOLD.replace("cone = 1", "cone = 1\nconez = 2"));
    let out = froblab(&["run", "--config", p.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("toric.conez") && err.contains("line"), "{}", err);
}

#[test]
fn perturbations_fail_only_their_targets() {
    for (p, targets) in [
        (Perturbation::R0Diagonal, &[1, 2, 8][..]),
        (Perturbation::ConifoldRelation, &[5, 6]),
        (Perturbation::Yukawa, &[7]),
    ] {
        let s = regression_suite(Some(4), p);
        let failed: Vec<usize> = s.results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
        assert_eq!(failed, targets, "{:?}", p);
    }
    let out = froblab(&["suite", "--perturb", "yukawa"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("criterion  7 FAIL"));
}

#[test]
fn reduced_order_suite_passes() {
    let out = froblab(&["suite", "--order", "3", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["criteria"].as_array().unwrap().len(), 10);
    assert_eq!(v["ok"], true);
}
