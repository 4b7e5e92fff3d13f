use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn trilin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trilin")).args(args).env_remove("TRILIN_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Rows of a CSV as maps from header to value.
fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| headers.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        .collect()
}

fn num(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

fn write_signal(path: &Path, p: &[f64], periods: f64, samples: usize) {
    let omega0 = 2.0 * PI * 10e3;
    let mut text = String::from("time_s,probability\n");
    for k in 1..=samples {
        let t = periods * 2.0 * PI / omega0 * k as f64 / samples as f64;
        let v: f64 = p.iter().enumerate().map(|(n, pn)| pn * (((n + 1) as f64).sqrt() * omega0 * t / 2.0).sin().powi(2)).sum();
        text.push_str(&format!("{t:?},{v:?}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn modes_prints_reference_trap() {
    let o = trilin(&["modes"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let row = out.lines().find(|l| l.starts_with("omega_a")).unwrap();
    let khz: f64 = row.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((khz - 1414.0).abs() < 1.0);
    assert!(out.contains("z0 = "));
}

#[test]
fn resonance_ratio_flag() {
    let o = trilin(&["modes", "--resonance-ratio"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0.5560"));
}

#[test]
fn unstable_radial_mode_exits_3() {
    let o = trilin(&["modes", "--omega-x", "800"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("x-radial zigzag"));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"trap": {"omega_q_khz": 1}}"#).unwrap();
    let o = trilin(&["modes", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(trilin(&["run", "warp"]).status.code(), Some(2));
    assert_eq!(trilin(&["run", "jc", "--truncation", "3,3"]).status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"trap": {"omega_x_khz": 2000, "omega_z_khz": 587}}"#).unwrap();
    let out = dir.path().join("o");
    let o = trilin(&["modes", "--config", cfg.to_str().unwrap(), "--omega-x", "1056", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("modes.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["trap"]["omega_x_khz"], 1056.0);
    assert!(m["inputs"].as_object().unwrap().len() == 1);
}

#[test]
fn exchange_defaults_follow_cos_squared_and_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = trilin(&["run", "exchange", "--defaults", "--out", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let rows = read_csv(&a.join("exchange.csv"));
    assert_eq!(rows.len(), 301);
    for r in &rows {
        assert!((num(r, "n_a") - num(r, "xi_tau").cos().powi(2)).abs() < 1e-9);
    }
    for name in ["exchange.csv", "exchange_fit.csv", "exchange_populations.csv", "exchange_sectors.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let m: serde_json::Value = serde_json::from_slice(&fs::read(a.join("exchange.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["leakage"]["flagged"], false);
    let hash = m["outputs"]["exchange.csv"].as_str().unwrap();
    assert_eq!(hash, trilin::cli::sha256_hex(&fs::read(a.join("exchange.csv")).unwrap()));
}

#[test]
fn jc_fock_3_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let o = trilin(&["run", "jc", "--fock", "3", "--no-coherent", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = read_csv(&dir.path().join("jc_fock_fit.csv"));
    assert_eq!(fit.len(), 1);
    let m: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("jc.manifest.json")).unwrap()).unwrap();
    assert!(m["config"]["jc"]["coherent_nbar"].is_null());

    // ξ from the modes command, independent of the run.
    let modes = stdout(&trilin(&["modes", "--delta", "0"]));
    let xi_rad: f64 = modes.lines().find(|l| l.starts_with("xi ")).unwrap().split_whitespace().nth(1).unwrap().parse().unwrap();
    let expected_hz = 2.0 * 4f64.sqrt() * xi_rad / (2.0 * PI);
    let got = num(&fit[0], "fitted_frequency_hz");
    assert!((got / expected_hz - 1.0).abs() < 1e-3, "{got} vs {expected_hz}");
}

#[test]
fn tomography_recovers_fock_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("fock1.csv");
    write_signal(&input, &[0.0, 1.0], 20.0, 400);
    let out = dir.path().join("o");
    let o = trilin(&["tomography", input.to_str().unwrap(), "--n-cut", "8", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&out.join("tomography.csv"));
    for r in &rows {
        let want = if r["n"] == "1" { 1.0 } else { 0.0 };
        assert!((num(r, "p") - want).abs() < 1e-6);
    }
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("tomography.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["inputs"].as_object().unwrap().len(), 1);
}

#[test]
fn tomography_recovers_poisson_mean() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("poisson.csv");
    let nbar: f64 = 1.8;
    let mut p = vec![(-nbar).exp()];
    for n in 1..=15 {
        let prev = p[n - 1];
        p.push(prev * nbar / n as f64);
    }
    write_signal(&input, &p, 20.0, 400);
    let out = dir.path().join("o");
    let o = trilin(&["tomography", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = read_csv(&out.join("tomography_summary.csv"));
    assert!((num(&summary[0], "mean") - nbar).abs() < 1e-3);
}

#[test]
fn short_signal_exits_4_and_leaves_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("short.csv");
    write_signal(&input, &[0.3, 0.4, 0.3], 0.2, 40);
    let out = dir.path().join("o");
    let o = trilin(&["tomography", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("extend the probe time window"));
    assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn missing_column_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    fs::write(&input, "t,p\n0.1,0.2\n").unwrap();
    let o = trilin(&["tomography", input.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_cap_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_trilin")).args(["modes"]).env("TRILIN_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_trilin")).args(["modes"]).env("TRILIN_THREADS", "2").output().unwrap();
    assert!(o.status.success());
}
