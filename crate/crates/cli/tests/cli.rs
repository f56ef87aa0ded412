//! End-to-end runs of the `oamux` binary against the shipped configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use oamux_core::linalg::{frobenius_distance, CMatrix};
use oamux_core::render::from_pgm;
use oamux_core::{angular_lobe_count, BasisMatrix, BasisSpec, Complex64, DensityMatrix, GridSpec};
use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn oamux(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oamux")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) {
    let out = oamux(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_density(path: &Path) -> DensityMatrix {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn mux_rho() -> DensityMatrix {
    let s3 = 3f64.sqrt();
    let rows = [
        [2.0, 2.0, 0.0, 0.0],
        [2.0, 2.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, s3],
        [0.0, 0.0, s3, 3.0],
    ];
    DensityMatrix::new(
        BasisSpec::new([-4, -2, 1, 3]).unwrap(),
        CMatrix::from_fn(4, 4, |i, j| Complex64::new(rows[i][j] / 8.0, 0.0)),
    )
    .unwrap()
}

#[test]
fn simulate_writes_ideal_and_port_states() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&[
        "simulate",
        "--config",
        config("mux_4d.toml").to_str().unwrap(),
        "--out",
        out,
    ]);

    let target = mux_rho();
    for file in ["ideal_rho.json", "bright_rho.json"] {
        let rho = read_density(&dir.path().join(file));
        assert!(frobenius_distance(rho.matrix(), target.matrix()) <= 1e-12, "{file}");
    }
    let dark: BasisMatrix =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dark_rho.json")).unwrap()).unwrap();
    assert!(dark.matrix().iter().all(|z| z.norm() == 0.0));

    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["dark_weight"], 0.0);
    assert_eq!(report["purity_dark"], Value::Null);
    assert!(report.get("tomography").is_none());
}

#[test]
fn exact_tomography_recovers_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&[
        "tomography",
        "--config",
        config("mux_4d.toml").to_str().unwrap(),
        "--out",
        out,
        "--exact",
    ]);
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["tomography"]["exposure"], "infinite");
    assert!(report["tomography"]["fidelity"].as_f64().unwrap() >= 1.0 - 1e-10);
    assert!(!dir.path().join("counts.json").exists());
}

#[test]
fn sampled_tomography_scores_high_and_follows_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("mux_4d.toml");
    let cfg = cfg.to_str().unwrap();
    run_ok(&["tomography", "--config", cfg, "--out", a.path().to_str().unwrap()]);
    run_ok(&[
        "tomography",
        "--config",
        cfg,
        "--out",
        b.path().to_str().unwrap(),
        "--seed",
        "99",
    ]);

    let ra = read_json(&a.path().join("report.json"));
    let rb = read_json(&b.path().join("report.json"));
    assert_eq!(ra["tomography"]["seed"], 2016);
    assert_eq!(rb["tomography"]["seed"], 99);
    for r in [&ra, &rb] {
        assert!(r["tomography"]["fidelity"].as_f64().unwrap() >= 0.95);
    }
    let counts = |d: &Path| std::fs::read_to_string(d.join("counts.json")).unwrap();
    assert_ne!(counts(a.path()), counts(b.path()));
    let records = read_json(&a.path().join("counts.json"));
    assert_eq!(records.as_array().unwrap().len(), 4 + 2 * 4 * 3);
    assert_eq!(records[0]["label"]["kind"], "diagonal");
}

#[test]
fn phase_error_scenario_reports_the_dark_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&[
        "simulate",
        "--config",
        config("phase_error.toml").to_str().unwrap(),
        "--out",
        out,
    ]);
    let report = read_json(&dir.path().join("report.json"));
    let ratio = report["dark_bright_ratio"].as_f64().unwrap();
    assert!((ratio - 0.120).abs() <= 1e-3, "{ratio}");
    assert!(dir.path().join("bright.pgm").exists() && dir.path().join("dark.pgm").exists());

    let tilted = dir.path().join("mux_eps.toml");
    let text = std::fs::read_to_string(config("mux_4d.toml"))
        .unwrap()
        .replace("epsilon_rad = 0.0", "epsilon_rad = 0.6666");
    std::fs::write(&tilted, text).unwrap();
    let out = dir.path().join("mux_eps");
    run_ok(&[
        "simulate",
        "--config",
        tilted.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let ratio = read_json(&out.join("report.json"))["dark_bright_ratio"]
        .as_f64()
        .unwrap();
    assert!((ratio - 0.120).abs() <= 1e-3, "{ratio}");
}

#[test]
fn rendered_bright_port_shows_four_petals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&[
        "render",
        "--config",
        config("petals_l2.toml").to_str().unwrap(),
        "--out",
        out,
    ]);
    let grid = GridSpec::default();
    let bright = from_pgm(&std::fs::read(dir.path().join("bright.pgm")).unwrap(), &grid).unwrap();
    assert_eq!(angular_lobe_count(&bright, (0.25, 3.0)).unwrap(), 4);
    let dark = from_pgm(&std::fs::read(dir.path().join("dark.pgm")).unwrap(), &grid).unwrap();
    assert_eq!(dark.max(), 0.0);
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn fidelity_subcommand_compares_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&[
        "simulate",
        "--config",
        config("mux_4d.toml").to_str().unwrap(),
        "--out",
        out,
    ]);
    let ideal = dir.path().join("ideal_rho.json");
    let res = oamux(&["fidelity", ideal.to_str().unwrap(), ideal.to_str().unwrap()]);
    assert!(res.status.success());
    let v: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert!((v["fidelity"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
}

#[test]
fn invalid_config_fails_with_a_json_record() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config("mux_4d.toml"))
        .unwrap()
        .replacen("weight = 0.5", "weight = 0.6", 1);
    std::fs::write(&bad, text).unwrap();
    let res = oamux(&[
        "simulate",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!res.status.success());
    let v: Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(v["kind"], "validation_error");
    assert_eq!(v["field"], "sources.weight");
    assert!(v["invariant"].as_str().unwrap().contains("weights must sum to 1"));

    std::fs::write(&bad, "basis = [1, 2\n").unwrap();
    let res = oamux(&["simulate", "--config", bad.to_str().unwrap()]);
    let v: Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(v["kind"], "syntax_error");
    assert!(v["line"].as_u64().is_some());
}

#[test]
fn empty_bright_port_cannot_be_measured() {
    let dir = tempfile::tempdir().unwrap();
    let odd = dir.path().join("odd.toml");
    std::fs::write(
        &odd,
        "basis = [1, 3]\n[[sources]]\nport = \"A\"\nweight = 1.0\nterms = [[1, 1.0, 0.0], [3, 1.0, 0.0]]\n",
    )
    .unwrap();
    let res = oamux(&[
        "tomography",
        "--config",
        odd.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!res.status.success());
    let v: Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(v["kind"], "model_error");
}
