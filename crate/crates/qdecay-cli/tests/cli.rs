//! End-to-end checks of the `qdecay` binary: artifact formats, exit codes,
//! caching, and byte-level determinism. Heavy numerics live in the library
//! and acceptance suites; everything here runs small truncations.

use std::path::Path;
use std::process::{Command, Output};

fn qdecay(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdecay"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn poles_csv_carries_hash_header_and_correct_lowest_pole() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), r#"{"n_poles": 20}"#);
    let out = qdecay(&["--config", &config, "poles"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = read(&tmp.path().join("poles.csv"));
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# qdecay-cli v"));
    let hash_line = lines.next().unwrap();
    assert!(hash_line.starts_with("# config-hash: "));
    assert_eq!(hash_line.trim_start_matches("# config-hash: ").len(), 64);
    assert_eq!(
        lines.next().unwrap(),
        "n,re_kappa_nm^-1,im_kappa_nm^-1,re_E_eV,im_E_eV,class"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    let re_kappa: f64 = first[1].parse().unwrap();
    assert!((re_kappa - 0.375_206_535_5).abs() < 1e-9, "{re_kappa}");
    assert_eq!(first[5], "resonance");
    assert_eq!(text.lines().filter(|l| l.ends_with(",resonance")).count(), 20);
}

#[test]
fn survival_is_byte_identical_between_runs_and_cached() {
    let tmp_a = tempfile::tempdir().unwrap();
    let tmp_b = tempfile::tempdir().unwrap();
    let config_body = r#"{"n_poles": 60, "time_grid": {"kind": "linear", "t_min_fs": 0.0, "t_max_fs": 30.0, "points": 16}}"#;
    let config_a = write_config(tmp_a.path(), config_body);
    let config_b = write_config(tmp_b.path(), config_body);

    let first = qdecay(&["--config", &config_a, "survival"], tmp_a.path());
    assert!(first.status.success());
    let second = qdecay(&["--config", &config_b, "survival"], tmp_b.path());
    assert!(second.status.success());
    assert_eq!(
        read(&tmp_a.path().join("survival.csv")),
        read(&tmp_b.path().join("survival.csv"))
    );

    // re-run in the same directory: spectral table now served from cache
    let third = qdecay(&["--config", &config_a, "survival"], tmp_a.path());
    assert!(third.status.success());
    assert!(String::from_utf8_lossy(&third.stderr).contains("cache hit"));
    assert_eq!(
        read(&tmp_a.path().join("survival.csv")),
        read(&tmp_b.path().join("survival.csv"))
    );
}

#[test]
fn fit_recovers_an_exact_quadratic_model_from_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,S\n");
    for i in 1..=30 {
        let t = 0.004 * i as f64;
        csv.push_str(&format!("{},{}\n", t, 1.0 - (t / 2.0).powi(2)));
    }
    let data = tmp.path().join("curve.csv");
    std::fs::write(&data, csv).unwrap();

    let out = qdecay(
        &["fit", "--input", data.to_str().unwrap(), "--mode", "two-point"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("fit.json"))).unwrap();
    assert_eq!(summary["theta"].as_f64().unwrap(), 2.0);
    assert!((summary["tau_star"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!(summary["residual"].as_f64().unwrap() < 1e-20);
    assert_eq!(summary["source"], data.display().to_string());
}

#[test]
fn experiment_prefers_the_generating_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let out = qdecay(&["--seed", "42", "experiment"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("experiment-fits.json"))).unwrap();
    let datasets = summary["datasets"].as_array().unwrap();
    assert_eq!(datasets.len(), 2);
    assert_eq!(datasets[0]["preferred_theta"].as_f64().unwrap(), 2.0);
    assert_eq!(datasets[1]["preferred_theta"].as_f64().unwrap(), 1.5);
    // the generated data files carry their seed so runs are reconstructible
    let quadratic = read(&tmp.path().join("experiment-quadratic.csv"));
    assert!(quadratic.contains("# seed: 42"), "{quadratic}");
}

#[test]
fn compare_reports_zero_deviation_for_identical_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = "t_fs,S\n0.0,1.0\n1.0,0.9\n2.0,0.7\n";
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    std::fs::write(&a, csv).unwrap();
    std::fs::write(&b, csv).unwrap();
    let out = qdecay(
        &["compare", a.to_str().unwrap(), b.to_str().unwrap()],
        tmp.path(),
    );
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("compare.json"))).unwrap();
    assert_eq!(summary["joined_points"].as_u64().unwrap(), 3);
    assert_eq!(summary["max_abs_deviation"].as_f64().unwrap(), 0.0);
}

#[test]
fn invalid_inputs_exit_2_with_context() {
    let tmp = tempfile::tempdir().unwrap();

    let bad_config = tmp.path().join("bad.json");
    std::fs::write(&bad_config, "{\"n_poles\": 0}").unwrap();
    let out = qdecay(&["--config", bad_config.to_str().unwrap(), "poles"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_poles"));

    let out = qdecay(&["fit", "--input", "/does/not/exist.csv"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    let malformed = tmp.path().join("malformed.csv");
    std::fs::write(&malformed, "t,S\n1.0,0.9\n2.0,oops\n").unwrap();
    let out = qdecay(&["fit", "--input", malformed.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "missing line number: {stderr}");
}

#[test]
fn corrupt_cache_exits_3_with_stage_tag() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), r#"{"n_poles": 25}"#);
    assert!(qdecay(&["--config", &config, "coeffs"], tmp.path()).status.success());

    let cache_dir = tmp.path().join("cache");
    let entry = std::fs::read_dir(&cache_dir).unwrap().next().unwrap().unwrap();
    let mut text = read(&entry.path());
    text.push_str("{\"n\": broken\n");
    std::fs::write(entry.path(), text).unwrap();

    let out = qdecay(&["--config", &config, "coeffs"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[cache]"));
}

#[test]
fn selftest_writes_report_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = qdecay(&["faddeyeva-selftest"], tmp.path());
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("faddeyeva-selftest.json"))).unwrap();
    assert_eq!(report["series_points"].as_u64().unwrap(), 10_000);
    assert!(report["max_series_rel"].as_f64().unwrap() < 1e-13);
}
