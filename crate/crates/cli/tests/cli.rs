use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stageccd"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

/// Run the binary and return its exit code.
fn stageccd(args: &[&str]) -> i32 {
    let out = bin().args(args).output().unwrap();
    out.status.code().unwrap()
}

fn read_summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Case 1 with a coarse inner grid and two outer iterations.
const SHORT_CCD: &str = r#"{
  "plant": { "kind": "two_mass" },
  "filter_params": { "m_k": 2e7 },
  "inner": { "n_s": 4, "n_t": 4, "warm_n": 3, "f_s_range_hz": [100.0, 1000.0], "f_t_range_hz": [5.0, 200.0] },
  "outer": {
    "w1": 0.0995, "w2": -0.995,
    "theta_min": [55.0, 55.0], "theta_max": [70.0, 70.0],
    "theta0": [67.56, 67.56], "max_iter": 2
  }
}"#;

#[test]
fn missing_config_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("absent.json");
    assert_eq!(stageccd(&["analyze", "--config", missing.to_str().unwrap()]), 2);
    assert_eq!(stageccd(&["ccd", "--config", missing.to_str().unwrap()]), 2);
    assert_eq!(stageccd(&["frobnicate"]), 2);
}

#[test]
fn malformed_configs_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let unknown = write_config(tmp.path(), "u.json", r#"{"plant": {"kind": "two_mass", "theta": [60, 60]}, "filter_params": {"m_k": 2e7}, "extra": 1}"#);
    assert_eq!(stageccd(&["analyze", "--config", unknown.to_str().unwrap(), "--output-dir", out]), 2);
    let wrong_len = write_config(tmp.path(), "w.json", r#"{"plant": {"kind": "two_mass", "theta": [60]}, "filter_params": {"m_k": 2e7}}"#);
    assert_eq!(stageccd(&["analyze", "--config", wrong_len.to_str().unwrap(), "--output-dir", out]), 2);
    let no_outer = write_config(tmp.path(), "n.json", r#"{"plant": {"kind": "two_mass", "theta": [60, 60]}, "filter_params": {"m_k": 2e7}}"#);
    assert_eq!(stageccd(&["ccd", "--config", no_outer.to_str().unwrap(), "--output-dir", out]), 2);
}

#[test]
fn bode_minimum_sits_at_the_analytic_zero() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "m60.json", r#"{"plant": {"kind": "two_mass", "theta": [60.0, 60.0]}, "filter_params": {"m_k": 2e7}}"#);
    let out = tmp.path().join("out");
    assert_eq!(stageccd(&["analyze", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]), 0);
    let csv = std::fs::read_to_string(out.join("bode.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "freq_hz,sigma_max_db,phase_deg");
    // search above the rigid-body roll-off, below the resonance
    let (f_min, _) = lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[0], v[1])
        })
        .filter(|&(f, _)| (20.0..1000.0).contains(&f))
        .fold((0.0, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best });
    let k = 2.0 * 60f64.powi(4) + 2.0 * 60f64.powi(4);
    let analytic = (k / 60.0).sqrt() / (2.0 * PI);
    assert!((f_min - analytic).abs() <= 0.5, "{f_min} vs {analytic}");
    assert!((f_min - 147.9).abs() <= 0.5);
    let summary = read_summary(&out);
    let fr = summary["first_resonance_hz"].as_f64().unwrap();
    assert!((fr - (k * (2.0 / 60.0)).sqrt() / (2.0 * PI)).abs() < 1e-6 * fr);
    assert!(summary.get("bandwidth_hz").is_none());
}

#[test]
fn declared_files_exist_and_nothing_else_is_written() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = configs().join("case1_baseline.json");
    assert_eq!(stageccd(&["analyze", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]), 0);
    let summary = read_summary(&out);
    let declared: Vec<String> = summary["files"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    let on_disk: Vec<String> = read_dir(&out).into_keys().collect();
    let mut sorted = declared.clone();
    sorted.sort();
    assert_eq!(sorted, on_disk);
    for f in ["bode.csv", "bode.svg", "sweep.csv", "sensitivity.csv", "sensitivity.svg", "summary.json"] {
        assert!(declared.iter().any(|d| d == f), "{f} missing");
    }
    let svg = std::fs::read_to_string(out.join("sensitivity.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("bandwidth"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "short.json", SHORT_CCD);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(stageccd(&["ccd", "--config", cfg.to_str().unwrap(), "--output-dir", a.to_str().unwrap()]), 0);
    assert_eq!(stageccd(&["ccd", "--config", cfg.to_str().unwrap(), "--output-dir", b.to_str().unwrap(), "--threads", "3"]), 0);
    let (fa, fb) = (read_dir(&a), read_dir(&b));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        assert!(bytes == &fb[name], "{name} differs between runs");
    }
}

#[test]
fn summary_is_recomputable_from_the_history_csv() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "short.json", SHORT_CCD);
    let out = tmp.path().join("out");
    assert_eq!(stageccd(&["ccd", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]), 0);
    let csv = std::fs::read_to_string(out.join("history.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    let last = rows.last().unwrap();
    let col = |name: &str| last[header.iter().position(|h| *h == name).unwrap()];
    let s = read_summary(&out);
    let num = |k: &str| s[k].as_f64().unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
    assert!(close(num("bandwidth_hz"), col("bandwidth_hz")));
    assert!(close(num("cost"), col("cost")));
    assert!(close(num("J"), col("J")));
    assert!(close(num("omega_s_hz"), col("omega_s_hz")));
    assert!(close(num("omega_t_hz"), col("omega_t_hz")));
    assert_eq!(s["iterations"].as_u64().unwrap() as f64, col("iteration"));
    for (i, t) in s["theta"].as_array().unwrap().iter().enumerate() {
        assert!(close(t.as_f64().unwrap(), col(&format!("theta_{}", i + 1))));
    }
    // bookkeeping identity on every row
    for r in &rows {
        let get = |name: &str| r[header.iter().position(|h| *h == name).unwrap()];
        let mass = get("theta_1") + get("theta_2");
        assert!(close(get("cost"), mass));
        let j = 0.0995 * get("cost") - 0.995 * 2.0 * PI * get("bandwidth_hz");
        assert!(close(get("J"), j), "{} vs {j}", get("J"));
    }
    // history.json carries the same records
    let hist: Value = serde_json::from_str(&std::fs::read_to_string(out.join("history.json")).unwrap()).unwrap();
    assert_eq!(hist["iterations"].as_array().unwrap().len(), rows.len());
    for f in ["history.csv", "history.json", "convergence.svg", "sweep.csv", "bode.csv", "sensitivity.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn infeasible_start_exits_3_with_diagnostics() {
    let tmp = TempDir::new().unwrap();
    let json = SHORT_CCD.replace(r#""n_s": 4"#, r#""s_low": 1e-7, "n_s": 4"#);
    let cfg = write_config(tmp.path(), "infeasible.json", &json);
    let out = tmp.path().join("out");
    assert_eq!(stageccd(&["ccd", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]), 3);
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 17);
    assert!(sweep.lines().skip(1).all(|l| l.contains(",false,")));
}

#[test]
fn modal_file_plants_are_analysis_only() {
    let tmp = TempDir::new().unwrap();
    std::fs::create_dir(tmp.path().join("models")).unwrap();
    std::fs::write(
        tmp.path().join("models/stage.json"),
        r#"{"modal_freqs_hz": [0.0, 180.0, 420.0], "damping_ratios": [0.0, 0.01, 0.01],
            "b_modal": [[0.12], [0.08], [0.05]], "c_modal": [[0.12, 0.08, 0.05]]}"#,
    )
    .unwrap();
    // the modal path resolves against the config's directory
    let cfg = write_config(
        tmp.path(),
        "modal.json",
        r#"{"plant": {"kind": "modal_file", "path": "models/stage.json"}, "filter_params": {"m_k": 4.5e4},
            "outer": {"w1": 1.0, "w2": -0.03, "theta_min": [1.0], "theta_max": [2.0]}}"#,
    );
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    assert_eq!(stageccd(&["analyze", "--config", cfg.to_str().unwrap(), "--output-dir", out]), 0);
    let s = read_summary(Path::new(out));
    assert!((s["first_resonance_hz"].as_f64().unwrap() - 180.0).abs() < 1e-6);
    assert_eq!(stageccd(&["ccd", "--config", cfg.to_str().unwrap(), "--output-dir", out]), 2);
}

#[test]
fn in_process_entry_point_matches_binary_exit_codes() {
    assert_eq!(stageccd_cli::run(["stageccd", "analyze", "--config", "/nonexistent/x.json"]), 2);
    assert_eq!(stageccd_cli::run(["stageccd", "--help"]), 0);
}
