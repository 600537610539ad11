use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qmlab::io::read_matrix_csv;
use serde_json::{json, Value};
use tempfile::TempDir;

fn run(dir: &TempDir, config: &Value, extra: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.path().join("scenario.json");
    fs::write(&cfg, serde_json::to_string_pretty(config).unwrap()).unwrap();
    let out = dir.path().join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_qmlab"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    (output, out)
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn check_scenario_exits_zero() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run(&dir, &json!({"kind": "check"}), &["--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["passed"], true);
    assert_eq!(r["result"]["checks"].as_array().unwrap().len(), 10);
}

#[test]
fn point_masses_report_their_distance() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "kind": "wasserstein",
        "space": {"kind": "line", "coords": [0.0, 0.3, 1.7, 2.0]},
        "mu": {"dirac": 1},
        "nu": {"dirac": 3},
    });
    let (o, out) = run(&dir, &cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    assert!((r["result"]["w1"].as_f64().unwrap() - 1.7).abs() < 1e-12);
    assert!(out.join("coupling.csv").exists());
}

#[test]
fn rotation_field_tables_are_symmetric() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "kind": "rotation-field",
        "p": 1,
        "q": 4,
        "ts": [-0.5, -0.25, 0.0, 0.25, 0.5],
        "n": 16,
    });
    let (o, out) = run(&dir, &cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["d_hat.csv", "gamma.csv"] {
        let (labels, rows) = read_matrix_csv(&fs::read_to_string(out.join(name)).unwrap()).unwrap();
        assert_eq!(labels.len(), 5, "{name}");
        assert_eq!(rows.len(), 5, "{name}");
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row[i], 0.0, "{name}");
            for (j, &v) in row.iter().enumerate() {
                assert!((v - rows[j][i]).abs() < 1e-12, "{name}[{i}][{j}]");
                assert!(v >= 0.0);
            }
        }
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let cfg = json!({
        "kind": "ldp",
        "depth": 3,
        "eps": 0.2,
        "n_values": [4, 8, 16],
        "trials": 400,
    });
    let read = |seed: &str| {
        let dir = TempDir::new().unwrap();
        let (o, out) = run(&dir, &cfg, &["--seed", seed]);
        assert_eq!(o.status.code(), Some(0));
        (fs::read(out.join("ldp.csv")).unwrap(), fs::read(out.join("report.json")).unwrap())
    };
    let a = read("11");
    assert_eq!(a, read("11"));
    assert_ne!(a.1, read("12").1);
}

#[test]
fn format_filter_limits_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "kind": "birkhoff",
        "space": {"kind": "circle", "n": 6, "circumference": 1.0},
        "dynamics": {"kind": "rotation", "steps": 1},
        "nucleus": {"r": 0.5, "eps": 0.2},
        "eps": 0.1,
        "n_max": 24,
    });
    let (o, out) = run(&dir, &cfg, &["--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["birkhoff.csv"]);
}

#[test]
fn malformed_config_exits_two() {
    let dir = TempDir::new().unwrap();
    let (o, _) = run(&dir, &json!({"kind": "wasserstein", "space": {"kind": "interval", "n": 3}}), &[]);
    assert_eq!(o.status.code(), Some(2));
    let (o, _) = run(&dir, &json!({"kind": "check", "bogus": 1}), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn domain_error_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "kind": "nucleus",
        "space": {"kind": "interval", "n": 4, "length": 1.0},
        "r": 0.1,
        "eps": 0.1,
        "probes": 10,
    });
    let (o, _) = run(&dir, &cfg, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("domain error"));
}
