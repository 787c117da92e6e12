// 0.7071 is a rounded target value, not a stand-in for the constant.
#![allow(clippy::approx_constant)]

use decolab_cli::commands::{
    read_weights, BATH_HEADER, CLASSICAL_HEADER, EVOLVE_HEADER, WEIGHTS_HEADER, WIGNER_HEADER,
};
use decolab_core::evolution::asymptotic_state;
use decolab_core::instances::{random_observable, random_state, rng};
use decolab_core::io::{matrix_to_json, write_json, FiveBlockJson, KernelJson};
use decolab_core::linalg::{self, CMat};
use decolab_core::pointer::{extract_weights, pointer_basis, PointerFrame};
use decolab_core::spectral::SpectralModel;
use decolab_core::wigner::{periodic_grid, PositionKernel};
use num_complex::Complex64;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn decolab(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_decolab"));
    cmd.args(args).env_remove("DECOLAB_CONFIG");
    if let Some(c) = config {
        cmd.env("DECOLAB_CONFIG", c);
    }
    cmd.output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn header(text: &str) -> Vec<&str> {
    text.lines().next().unwrap().split(',').collect()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn state_files(dir: &TempDir) -> (PathBuf, PathBuf) {
    let model = SpectralModel::uniform(-0.7, 3.0, 9, vec![2]).unwrap();
    let mut g = rng(3);
    let rho = random_state(&mut g, &model);
    let obs = random_observable(&mut g, &model);
    let (s, o) = (dir.path().join("state.json"), dir.path().join("obs.json"));
    write_json(&s, &FiveBlockJson::from_state(&rho)).unwrap();
    write_json(&o, &FiveBlockJson::from_observable(&obs)).unwrap();
    (s, o)
}

#[test]
fn evolve_is_deterministic_with_documented_header() {
    let dir = tempfile::tempdir().unwrap();
    let (s, o) = state_files(&dir);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let r = decolab(
            &[
                "evolve",
                "--state",
                p(&s),
                "--obs",
                p(&o),
                "--times",
                "0:5:11",
                "--out",
                p(out),
            ],
            None,
        );
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(!text.contains('\r'));
    assert_eq!(header(&text), EVOLVE_HEADER);
    let data = rows(&text);
    assert_eq!(data.len(), 11);
    assert_eq!(data[10][0], 5.0);
}

#[test]
fn pointer_frame_round_trips_and_feeds_the_classical_step() {
    let dir = tempfile::tempdir().unwrap();
    let model = SpectralModel::uniform(-0.5, 8.0, 401, vec![1]).unwrap();
    let rho = random_state(&mut rng(9), &model);
    let s = dir.path().join("state.json");
    write_json(&s, &FiveBlockJson::from_state(&rho)).unwrap();
    let (frame_path, weights_path) = (dir.path().join("frame.json"), dir.path().join("w.csv"));
    let r = decolab(
        &[
            "pointer",
            "--state",
            p(&s),
            "--out",
            p(&frame_path),
            "--weights",
            p(&weights_path),
        ],
        None,
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    let frame: PointerFrame = serde_json::from_str(&std::fs::read_to_string(&frame_path).unwrap()).unwrap();
    let direct = pointer_basis(&rho).unwrap();
    assert_eq!(frame, direct);

    let text = std::fs::read_to_string(&weights_path).unwrap();
    assert_eq!(header(&text), WEIGHTS_HEADER);
    let (m2, w2) = read_weights(&weights_path).unwrap();
    assert_eq!(m2, model);
    assert_eq!(w2, extract_weights(&asymptotic_state(&rho), &direct).unwrap());

    let out = dir.path().join("classical.csv");
    let r = decolab(
        &[
            "classical",
            "--weights",
            p(&weights_path),
            "--widths",
            "0.1",
            "--t",
            "1.0",
            "--extent",
            "3",
            "--points",
            "21",
            "--out",
            p(&out),
        ],
        None,
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(header(&text), CLASSICAL_HEADER);
    let data = rows(&text);
    assert_eq!(data.len(), 21 * 21);
    assert!(data.iter().all(|r| r[2] >= -1e-8 && r[3] >= 0.0));
}

#[test]
fn wigner_of_the_ground_state_is_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let q = periodic_grid(64, 16.0);
    let k = PositionKernel::harmonic_eigenstate(&q, 1.0, 0, 1.0, 1.0).unwrap();
    let path = dir.path().join("k.json");
    write_json(&path, &KernelJson::from_kernel(&k)).unwrap();
    let r = decolab(&["wigner", "--kernel", p(&path)], None);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = String::from_utf8(r.stdout).unwrap();
    assert_eq!(header(&text), WIGNER_HEADER);
    let data = rows(&text);
    let qs: Vec<f64> = {
        let mut v: Vec<f64> = data.iter().map(|r| r[0]).collect();
        v.dedup();
        v
    };
    let ps: Vec<f64> = data.iter().take_while(|r| r[0] == data[0][0]).map(|r| r[1]).collect();
    let cell = (qs[1] - qs[0]) * (ps[1] - ps[0]);
    let total: f64 = data.iter().map(|r| r[2]).sum::<f64>() * cell;
    assert!((total - 1.0).abs() < 1e-6, "{total}");
}

#[test]
fn bath_reads_config_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bath.json"), r#"{"times": "0:2:3"}"#).unwrap();
    let r = decolab(&["bath"], Some(dir.path()));
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = String::from_utf8(r.stdout).unwrap();
    assert_eq!(header(&text), BATH_HEADER);
    assert_eq!(rows(&text).len(), 3);

    let r = decolab(&["bath", "--times", "0:2:5"], Some(dir.path()));
    assert_eq!(rows(&String::from_utf8(r.stdout).unwrap()).len(), 5);

    std::fs::write(dir.path().join("bath.json"), r#"{"tiems": "0:2:3"}"#).unwrap();
    assert_eq!(decolab(&["bath"], Some(dir.path())).status.code(), Some(2));
}

#[test]
fn histories_verdict_for_a_diagonal_state() {
    let dir = tempfile::tempdir().unwrap();
    let d = [0.5, 0.3, 0.2];
    let rho = CMat::from_fn(3, 3, |i, j| Complex64::from(if i == j { d[i] } else { 0.0 }));
    let projectors: Vec<_> = (0..3)
        .map(|i| {
            let mut e = linalg::zeros(3);
            e[(i, i)] = Complex64::from(1.0);
            matrix_to_json(&e)
        })
        .collect();
    let (rp, fp) = (dir.path().join("rho.json"), dir.path().join("family.json"));
    write_json(&rp, &matrix_to_json(&rho)).unwrap();
    write_json(&fp, &json!({ "projectors": projectors })).unwrap();
    let r = decolab(
        &["histories", "--rho", p(&rp), "--family", p(&fp), "--times", "0,1,2"],
        None,
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let v: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(v["level"], "matrix");
    assert_eq!(v["histories"].as_array().unwrap().len(), 27);
}

fn write_manifest(dir: &Path, name: &str, body: Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    path
}

#[test]
fn zero_tolerance_fails_with_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        "strict.json",
        json!({"name": "strict", "subcommand": "bath",
               "expected": [{"metric": "bath.asymptotic_delta_q", "value": 0.7071, "tolerance": 0.0}]}),
    );
    let reports = tempfile::tempdir().unwrap();
    let out = reports.path().join("report.json");
    let r = decolab(&["run", "--manifest", p(&m), "--out", p(&out)], None);
    assert_eq!(r.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(
        stderr.contains("FAIL strict/bath.asymptotic_delta_q") && stderr.contains("delta"),
        "{stderr}"
    );
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
    assert!(report["metrics"][0]["delta"].as_f64().unwrap().abs() > 0.0);

    // the same metric passes at the published tolerance
    let ok = write_manifest(
        dir.path(),
        "ok.json",
        json!({"name": "ok", "subcommand": "bath",
               "expected": [{"metric": "bath.asymptotic_delta_q", "value": 0.7071, "tolerance": 2e-3}]}),
    );
    assert_eq!(decolab(&["run", "--manifest", p(&ok)], None).status.code(), Some(0));

    // verify-all reports the most severe outcome
    let r = decolab(&["verify-all", "--dir", p(dir.path())], None);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_manifest(
        dir.path(),
        "unknown.json",
        json!({"name": "u", "subcommand": "bath", "expected": [{"metric": "bath.nonsense", "value": 0, "tolerance": 1}]}),
    );
    assert_eq!(
        decolab(&["run", "--manifest", p(&unknown)], None).status.code(),
        Some(2)
    );
    let missing = write_manifest(
        dir.path(),
        "missing.json",
        json!({"name": "m", "subcommand": "bath", "inputs": {"config": "nowhere.json"},
               "expected": [{"metric": "bath.completeness", "value": 1, "tolerance": 1}]}),
    );
    let r = decolab(&["run", "--manifest", p(&missing)], None);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("missing file"));
    assert_eq!(
        decolab(&["run", "--manifest", "/nonexistent/m.json"], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(decolab(&["evolve", "--obs", "x.json"], None).status.code(), Some(2));
    assert_eq!(decolab(&["frobnicate"], None).status.code(), Some(2));
}

#[test]
fn free_oscillator_spiral_does_not_converge() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        "free.json",
        json!({"name": "free", "subcommand": "bath", "params": {"model": {"coupling": 0.0}},
               "expected": [{"metric": "bath.delta_q_late", "value": 0.7071, "tolerance": 1e-3}]}),
    );
    let r = decolab(&["run", "--manifest", p(&m)], None);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));
}
