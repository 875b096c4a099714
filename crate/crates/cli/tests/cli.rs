use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iot-energy"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let idx = rdr
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == name)
        .unwrap();
    rdr.records()
        .map(|r| r.unwrap()[idx].parse().unwrap())
        .collect()
}

#[test]
fn help_and_version_exit_zero() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);
    assert_eq!(code(&run(dir.path(), &["--version"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["optimal", "--bogus"])), 1);
    assert_eq!(
        code(&run(dir.path(), &["--bandwidth-hz", "-5", "optimal"])),
        1
    );
    assert_eq!(
        code(&run(dir.path(), &["--interference", "nope", "optimal"])),
        1
    );
    assert_eq!(
        code(&run(dir.path(), &["optimal", "--distance-m", "-1"])),
        1
    );
}

#[test]
fn missing_files_exit_three() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.csv");
    let table = format!("table:{}", missing.display());
    assert_eq!(
        code(&run(dir.path(), &["--interference", &table, "optimal"])),
        3
    );
    let m = missing.to_str().unwrap();
    assert_eq!(code(&run(dir.path(), &["fit-power", "--input", m])), 3);
    assert_eq!(code(&run(dir.path(), &["deployment", "--sites", m])), 3);
}

#[test]
fn validate_passes() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["validate"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 10);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
    assert!(dir.path().join("validate.manifest.json").exists());
}

#[test]
fn optimal_writes_manifest_with_db_echo() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["--noise-dbm", "-120", "optimal"]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("optimal.manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let noise_w = v["radio"]["noise_w"].as_f64().unwrap();
    assert!((noise_w / 1e-15 - 1.0).abs() < 1e-12);
    let echo = v["db"]["noise_dbm"].as_f64().unwrap();
    assert!((echo + 120.0).abs() < 1e-9);
    let mean_i = v["db"]["mean_interference_dbm"].as_f64().unwrap();
    assert!((mean_i + 95.4).abs() < 1e-9);
    assert_eq!(v["outputs"][0], "optimal.csv");
}

#[test]
fn zero_overhead_warns_but_succeeds() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["--overhead-w", "0", "optimal"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn contact_cdfs_are_ordered() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &["contact", "--intensity-km2", "1", "--n", "201"],
    );
    assert_eq!(code(&out), 0);
    let ppp = column(&dir.path().join("contact_ppp.csv"), "cdf");
    let mhc = column(&dir.path().join("contact_mhc.csv"), "cdf");
    let tri = column(&dir.path().join("contact_tri.csv"), "cdf");
    assert_eq!(ppp.len(), 201);
    for i in 0..ppp.len() {
        assert!(tri[i] >= mhc[i] - 1e-12, "row {i}");
        assert!(mhc[i] >= ppp[i] - 1e-12, "row {i}");
    }
}

#[test]
fn intensity_sweep_decreases() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &["sweep-intensity", "--method", "quad", "--n", "6"],
    );
    assert_eq!(code(&out), 0);
    let mut rdr = csv::Reader::from_path(dir.path().join("sweep_intensity.csv")).unwrap();
    let rows: Vec<(String, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[1].to_string(), r[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 18);
    for p in ["ppp", "mhc", "tri"] {
        let e: Vec<f64> = rows.iter().filter(|r| r.0 == p).map(|r| r.1).collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]), "{p}: {e:?}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = [
        "--seed",
        "7",
        "sweep-intensity",
        "--samples",
        "5000",
        "--n",
        "3",
    ];
    assert_eq!(code(&run(a.path(), &args)), 0);
    let mut threaded = vec!["--threads", "1"];
    threaded.extend_from_slice(&args);
    assert_eq!(code(&run(b.path(), &threaded)), 0);
    let x = std::fs::read(a.path().join("sweep_intensity.csv")).unwrap();
    let y = std::fs::read(b.path().join("sweep_intensity.csv")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn fit_power_recovers_line() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("p.csv");
    std::fs::write(
        &input,
        "tx_power_w,electric_power_w\n0.01,0.25\n0.05,0.41\n0.1,0.61\n",
    )
    .unwrap();
    let out = run(
        dir.path(),
        &["fit-power", "--input", input.to_str().unwrap()],
    );
    assert_eq!(code(&out), 0);
    let eta = column(&dir.path().join("fit_power.csv"), "conv_factor");
    let po = column(&dir.path().join("fit_power.csv"), "overhead_w");
    assert!((eta[0] - 4.0).abs() < 1e-12);
    assert!((po[0] - 0.21).abs() < 1e-12);
}

#[test]
fn synthetic_deployment_runs() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &[
            "deployment",
            "--synthetic-jitter",
            "0.2",
            "--synthetic-side-km",
            "8",
            "--device-intensity-km2",
            "50",
            "--bins",
            "4",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "cells.csv",
        "devices.csv",
        "bins.csv",
        "deployment.manifest.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert_eq!(column(&dir.path().join("bins.csv"), "count").len(), 4);
}
