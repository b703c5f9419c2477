use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn displab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_displab")).args(args).env("DISPLAB_OUTPUT_DIR", out).output().unwrap()
}

const SMALL: &str = r#"{
  "kind": "commutator_scaling",
  "profiles": [{ "kind": "trig_series", "mean": 1.5, "terms": [{ "amplitude": 0.4, "harmonic": 1 }], "period": 16.0 }],
  "grid": { "n": 256, "length": 16.0 },
  "n_list": [4.0, 8.0, 16.0],
  "seed": 2
}"#;

#[test]
fn list_prints_every_template() {
    let dir = tempfile::tempdir().unwrap();
    let out = displab(&["list"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "free_decay",
        "bv_uniform",
        "kronig_penney_window",
        "knapp_sweep",
        "phillips_oracle",
        "commutator_scaling",
        "nls_mass",
        "bochner_riesz_uniform",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn validate_normalizes_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(&good, SMALL).unwrap();
    let out = displab(&["validate", good.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let cfg: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["d"], 1);
    assert_eq!(cfg["ell"], 2);
    assert_eq!(cfg["profiles"][0]["terms"][0]["phase"], 0.0);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, SMALL.replacen("\"seed\"", "\"sede\"", 1)).unwrap();
    let out = displab(&["validate", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "validation");
    assert!(err["message"].as_str().unwrap().contains("sede"));

    let out = displab(&["validate", good.to_str().unwrap(), "--override", "d=7"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(displab(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(displab(&["run", "no_such_template"], dir.path()).status.code(), Some(1));
    assert_eq!(displab(&["run"], dir.path()).status.code(), Some(1));
}

#[test]
fn run_writes_artifacts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    std::fs::write(&cfg, SMALL).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for target in [&a, &b] {
        let out = displab(&["run", cfg.to_str().unwrap(), "--output-dir", target.to_str().unwrap(), "--seed", "9"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["commutator_scaling.csv", "commutator_scaling_summary.json", "commutator_scaling_manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(a.join("commutator_scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let summary: Value = serde_json::from_slice(&std::fs::read(a.join("commutator_scaling_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 9);
}

#[test]
fn output_dir_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = displab(&["run", "nls_mass", "--override", "knobs.nls.t_end=0.1", "--override", "knobs.nls.dt=0.05"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("nls_mass_summary.json").exists());
}

#[test]
fn runtime_failures_exit_two_with_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = displab(&["run", "knapp_sweep", "--override", "n_list=[256,512]", "--override", "times.count=5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "runtime");
    assert!(err["stage"].is_string());
}

#[test]
fn export_profile_writes_profile_and_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = displab(&["export-profile", "phillips_oracle"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let profile = std::fs::read_to_string(dir.path().join("phillips_oracle_profile0.csv")).unwrap();
    assert_eq!(profile.lines().next(), Some("x,a"));
    assert_eq!(profile.lines().count(), 257);
    let spectrum = std::fs::read_to_string(dir.path().join("phillips_oracle_spectrum4.csv")).unwrap();
    assert_eq!(spectrum.lines().next(), Some("k,lambda"));
    let lambdas: Vec<f64> = spectrum.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(lambdas.windows(2).all(|w| w[0] <= w[1]));
    assert!(lambdas[0].abs() < 1e-9);
}
