use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;
use tempfile::TempDir;

fn capflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capflow"))
        .current_dir(dir)
        .env_remove("CAPFLOW_OUT")
        .args(args)
        .output()
        .expect("spawn capflow")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    std::fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|x| x.unwrap().iter().map(str::to_string).collect())
        .collect()
}

const SCHW_SWEEP: &str = r#"{
  "name": "schwarzschild-sweep",
  "sweeps": [{"family": "schwarzschild", "params": {"m": 1.0, "rho0": [2.0, 2.25, 3.0]}}],
  "annuli": [{"inner": 1.0, "outer": 4.0, "relative": true}],
  "conformal_k": [1.5]
}"#;

#[test]
fn report_schwarzschild_sweep() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "s.json", SCHW_SWEEP);
    let out = capflow(tmp.path(), &["report", &cfg, "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let rep = read_json(&tmp.path().join("o/report.json"));
    assert_eq!(rep["schema_version"], 1);
    let profiles = rep["profiles"].as_array().unwrap();
    assert_eq!(profiles.len(), 3);
    for p in profiles {
        for key in ["params", "validation", "capacity", "verdicts", "identities"] {
            assert!(p.get(key).is_some(), "missing {key}");
        }
        assert!(p["violations"].as_array().unwrap().is_empty());
        assert!(p["error"].is_null());
    }
    let c = profiles[1]["capacity"]["value"].as_f64().unwrap();
    assert!((c - 1.5).abs() < 1e-12);

    let rows = csv_rows(&tmp.path().join("o/verdicts.csv"));
    assert!(rows.iter().all(|r| r[8] != "violated"));
    // Every catalog check plus two transformed checks per profile.
    assert_eq!(rows.len(), 3 * 17);
    assert!(tmp.path().join("o/identities.csv").exists());
}

#[test]
fn negative_control_exits_two_with_witness() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "neg.json",
        r#"{"sweeps": [{"family": "bump", "params": {"m": 0.1, "rho0": 1.0, "height": 0.3, "center": 3.0, "width": 0.5}}]}"#,
    );
    let out = capflow(tmp.path(), &["report", &cfg, "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    let rep = read_json(&tmp.path().join("o/report.json"));
    let p = &rep["profiles"][0];
    assert_eq!(p["validation"]["nonnegative_scalar_curvature"], false);
    let v = p["violations"].as_array().unwrap();
    assert!(v.iter().any(|x| x["kind"] == "validation" && x["rho"].is_number()));
}

#[test]
fn config_errors_exit_four() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("truncated.json", r#"{"sweeps": ["#),
        ("family.json", r#"{"sweeps": [{"family": "kerr", "params": {}}]}"#),
        (
            "param.json",
            r#"{"sweeps": [{"family": "flat", "params": {"rho0": 1, "spin": 2}}]}"#,
        ),
        (
            "missing.json",
            r#"{"sweeps": [{"family": "polytail", "params": {"m": 0.1}}]}"#,
        ),
        ("empty.json", r#"{"sweeps": []}"#),
        (
            "check.json",
            r#"{"sweeps": [{"family": "flat", "params": {"rho0": 1}}], "checks": ["no-such-check"]}"#,
        ),
        (
            "tgrid.json",
            r#"{"sweeps": [{"family": "flat", "params": {"rho0": 1}}], "t_grid": {"count": 1, "spacing": "uniform"}}"#,
        ),
        (
            "pair.json",
            r#"{"sweeps": [{"family": "flat", "params": {"rho0": 1}}], "identity_pairs": [[0.5, 1.0]]}"#,
        ),
        (
            "invalid.json",
            r#"{"sweeps": [{"family": "flat", "params": {"rho0": -1}}]}"#,
        ),
    ];
    for (name, body) in cases {
        let cfg = write(tmp.path(), name, body);
        let out = capflow(tmp.path(), &["report", &cfg]);
        assert_eq!(
            out.status.code(),
            Some(4),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert_eq!(capflow(tmp.path(), &["report", "absent.json"]).status.code(), Some(4));
    assert_eq!(capflow(tmp.path(), &["frobnicate"]).status.code(), Some(4));
    let cfg = write(
        tmp.path(),
        "ok.json",
        r#"{"sweeps": [{"family": "flat", "params": {"rho0": 1}}]}"#,
    );
    assert_eq!(
        capflow(tmp.path(), &["report", &cfg, "--tol-scale", "0"]).status.code(),
        Some(4)
    );
    assert_eq!(
        capflow(tmp.path(), &["report", &cfg, "--workers", "0"]).status.code(),
        Some(4)
    );
}

#[test]
fn numerical_failure_exits_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "n.json",
        r#"{"sweeps": [{"family": "polytail", "params": {"m": 0.45, "p": 1, "rho0": 1}}],
            "tolerance": {"rel_tol": 1e-15, "abs_tol": 1e-300, "max_depth": 1}}"#,
    );
    let out = capflow(tmp.path(), &["report", &cfg, "--out", "o"]);
    assert_eq!(out.status.code(), Some(3));
    let rep = read_json(&tmp.path().join("o/report.json"));
    assert!(rep["profiles"][0]["error"].as_str().unwrap().contains("quadrature"));
}

#[test]
fn deterministic_across_workers() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "d.json",
        r#"{"sweeps": [{"family": "polytail", "params": {"m": [0.1, 0.3], "p": [1, 2], "rho0": 1}},
                       {"family": "spline", "params": {"m": 0.3, "rho0": 1}}],
            "seed": 42}"#,
    );
    assert_eq!(
        capflow(tmp.path(), &["report", &cfg, "--out", "a", "--workers", "1"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        capflow(tmp.path(), &["report", &cfg, "--out", "b", "--workers", "4"])
            .status
            .code(),
        Some(0)
    );
    for f in ["report.json", "verdicts.csv", "identities.csv"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
    // 17 significant digits.
    let text = std::fs::read_to_string(tmp.path().join("a/report.json")).unwrap();
    let mut n = 0;
    for line in text.lines().filter(|l| l.trim_start().starts_with("\"value\": ")) {
        let num = line.trim().trim_start_matches("\"value\": ").trim_end_matches(',');
        let mantissa = num.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.len(), 18, "{num}");
        n += 1;
    }
    assert!(n > 0);
}

#[test]
fn env_overrides_out_flag() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "f.json",
        r#"{"sweeps": [{"family": "flat", "params": {"rho0": 1}}]}"#,
    );
    let out = Command::new(env!("CARGO_BIN_EXE_capflow"))
        .current_dir(tmp.path())
        .env("CAPFLOW_OUT", "from-env")
        .args(["report", &cfg, "--out", "from-flag"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("from-env/report.json").exists());
    assert!(!tmp.path().join("from-flag").exists());
}

fn column(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn monotone_tables() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "m.json",
        r#"{"sweeps": [{"family": "flat", "params": {"rho0": 1}},
                       {"family": "schwarzschild", "params": {"m": 1, "rho0": 2.25}},
                       {"family": "polytail", "params": {"m": 0.1, "p": 1, "rho0": 1}}],
            "t_grid": {"count": 64, "spacing": "geometric-towards-1"}}"#,
    );
    let out = capflow(tmp.path(), &["monotone", &cfg, "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let flat = csv_rows(&tmp.path().join("o/monotone_000.csv"));
    assert_eq!(flat.len(), 64);
    for i in 2..8 {
        assert!(column(&flat, i).iter().all(|&x| x == 0.0));
    }

    let s = csv_rows(&tmp.path().join("o/monotone_001.csv"));
    let cal_b = column(&s, 5);
    assert!(cal_b.windows(2).all(|w| w[1] >= w[0]));
    let limit = 4.0 * PI * 2.0 / 3.0;
    assert!((cal_b[63] - limit).abs() < 1e-4 * limit, "{}", cal_b[63]);

    let p = csv_rows(&tmp.path().join("o/monotone_002.csv"));
    for (i, dir) in [(4, 1.0), (5, 1.0), (6, 1.0), (7, -1.0)] {
        let col = column(&p, i);
        assert!(col.windows(2).all(|w| dir * (w[1] - w[0]) > 0.0), "column {i}");
    }

    let rep = read_json(&tmp.path().join("o/report.json"));
    for prof in rep["profiles"].as_array().unwrap() {
        let flags = prof["monotone"]["flags"].as_object().unwrap();
        assert!(flags.values().all(|v| v == true));
    }
}

#[test]
fn negative_control_monotone_violation() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "m.json",
        r#"{"sweeps": [{"family": "bump", "params": {"m": 0.1, "rho0": 1.0, "height": 0.3, "center": 3.0, "width": 0.5}}],
            "t_grid": {"count": 256, "spacing": "uniform"}}"#,
    );
    let out = capflow(tmp.path(), &["monotone", &cfg, "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    let rep = read_json(&tmp.path().join("o/report.json"));
    let v = rep["profiles"][0]["violations"].as_array().unwrap();
    assert!(v.iter().any(|x| x["kind"] == "monotone" && x["t"].is_number()));
}

#[test]
fn schwarzschild_table_rows() {
    let tmp = TempDir::new().unwrap();
    let rp = 1.0 + 3f64.sqrt() / 2.0;
    let radii = format!("0.5,1,{rp},2,5");
    let out = capflow(
        tmp.path(),
        &["schwarzschild-table", "--mass", "1", "--radii", &radii, "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&tmp.path().join("o/schwarzschild_table.csv"));
    assert_eq!(rows.len(), 6);
    let mh = column(&rows, 7);
    let best = mh.iter().cloned().fold(f64::MIN, f64::max);
    assert!((best - 2.0 / (3.0 * 3f64.sqrt())).abs() < 1e-12, "{best}");
    let photon = rows.last().unwrap();
    assert_eq!(photon[0], "photon-sphere");
    assert!((photon[1].parse::<f64>().unwrap() - rp).abs() < 1e-10);
    for r in &rows {
        let (c, closed): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!((c - closed).abs() < 1e-12 * closed);
    }

    let out = capflow(
        tmp.path(),
        &["schwarzschild-table", "--mass", "0", "--radii", "1,2,3", "--out", "z"],
    );
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&tmp.path().join("z/schwarzschild_table.csv"));
    assert_eq!(rows.len(), 3);
    assert!(column(&rows, 5).iter().all(|&q| q == 0.0));

    let out = capflow(
        tmp.path(),
        &["schwarzschild-table", "--mass", "2", "--radii", "1", "--out", "h"],
    );
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&tmp.path().join("h/schwarzschild_table.csv"));
    assert_eq!(rows[0][6].parse::<f64>().unwrap(), 0.0);
    assert!((rows[0][5].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);

    assert_eq!(
        capflow(tmp.path(), &["schwarzschild-table", "--mass", "-1", "--radii", "1"])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(
        capflow(tmp.path(), &["schwarzschild-table", "--mass", "1", "--radii", "0.2"])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn verify_identities_full_schwarzschild() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "i.json",
        r#"{"sweeps": [{"family": "schwarzschild", "params": {"m": [0.5, 1, 1.5], "rho0": [3, 4.5, 10]}}],
            "identity_samples": 10}"#,
    );
    let start = Instant::now();
    let out = capflow(tmp.path(), &["verify-identities", &cfg, "--out", "o"]);
    assert!(start.elapsed() < Duration::from_secs(60));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rows = csv_rows(&tmp.path().join("o/identities.csv"));
    // 6 local identities x 10 pairs + 3 global, for 9 profiles.
    assert_eq!(rows.len(), 9 * (6 * 10 + 3));
    assert!(rows.iter().all(|r| r[12] == "true"));
    assert!(!tmp.path().join("o/verdicts.csv").exists());
}
