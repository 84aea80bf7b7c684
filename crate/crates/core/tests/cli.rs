use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use besovlab::experiment::SummaryRow;

fn besovlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_besovlab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) {
    fs::write(dir.join("cfg.json"), body).unwrap();
}

const SMALL: &str = r#"{"family": {"kind": "glued_cubes", "n": 2}, "levels": [2, 3], "p": 1.5, "theta": [0.6, 0.8]}"#;

#[test]
fn gen_then_profile_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    for out in ["a", "b"] {
        let o = besovlab(dir.path(), &["--config", "cfg.json", "--out", out, "gen"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = besovlab(dir.path(), &["--config", "cfg.json", "--out", "a", "profile"]);
    assert_eq!(o.status.code(), Some(0));
    let o = besovlab(dir.path(), &["--config", "cfg.json", "--out", "b", "--jobs", "1", "profile"]);
    assert_eq!(o.status.code(), Some(0));
    let a = fs::read(dir.path().join("a/profiles/summary.csv")).unwrap();
    let b = fs::read(dir.path().join("b/profiles/summary.csv")).unwrap();
    assert_eq!(a, b);
    let rows: Vec<SummaryRow> = csv::Reader::from_reader(a.as_slice())
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.function == "indicator(E1)" && r.besov_pp.is_some()));
    assert!(dir.path().join("a/spaces/glued_cube2_L3.csv").exists());
    assert!(dir.path().join("a/spaces/manifest.json").exists());
}

#[test]
fn oracle_flag_cross_checks_small_levels() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        r#"{"family": {"kind": "gasket", "n": 2}, "levels": [4, 5], "theta": [0.7]}"#,
    );
    assert_eq!(besovlab(dir.path(), &["--config", "cfg.json", "gen"]).status.code(), Some(0));
    let o = besovlab(dir.path(), &["--config", "cfg.json", "--oracle", "profile"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/profiles/summary.json")).unwrap()).unwrap();
    let rows = summary["rows"].as_array().unwrap();
    // 81 atoms at level 4, 243 at level 5 is above the oracle limit
    assert!(rows[0]["oracle_diff"].as_f64().unwrap() <= 1e-12);
    assert!(rows[1]["oracle_diff"].is_null());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    assert_eq!(besovlab(dir.path(), &["--config", "cfg.json", "profile"]).status.code(), Some(2));
    assert_eq!(besovlab(dir.path(), &["--config", "missing.json", "gen"]).status.code(), Some(2));
    assert_eq!(besovlab(dir.path(), &["--config", "cfg.json", "report"]).status.code(), Some(2));
    write_config(dir.path(), r#"{"levels": [2, 3], "colour": "red"}"#);
    assert_eq!(besovlab(dir.path(), &["--config", "cfg.json", "gen"]).status.code(), Some(1));
    assert_eq!(besovlab(dir.path(), &["frobnicate"]).status.code(), Some(1));
    // three levels are needed for the growth certificate
    write_config(
        dir.path(),
        r#"{"family": {"kind": "cube", "n": 2}, "levels": [1, 2], "exponents": {"rho": false, "theta_p_star": false}}"#,
    );
    assert_eq!(besovlab(dir.path(), &["--config", "cfg.json", "exponents"]).status.code(), Some(4));
}

#[test]
fn budget_caps_point_counts() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    let o = Command::new(env!("CARGO_BIN_EXE_besovlab"))
        .current_dir(dir.path())
        .env("BESOVLAB_BUDGET", "100")
        .args(["--config", "cfg.json", "gen"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn decompose_and_report() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        r#"{"family": {"kind": "glued_cubes", "n": 1}, "levels": [3, 4, 5], "p": 1.5, "theta": [0.5]}"#,
    );
    for cmd in ["gen", "profile", "decompose", "report"] {
        let o = besovlab(dir.path(), &["--config", "cfg.json", cmd]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let first = fs::read(dir.path().join("out/decompose/verdict.json")).unwrap();
    assert_eq!(besovlab(dir.path(), &["--config", "cfg.json", "decompose"]).status.code(), Some(0));
    assert_eq!(first, fs::read(dir.path().join("out/decompose/verdict.json")).unwrap());
    let report = fs::read_to_string(dir.path().join("out/report.md")).unwrap();
    assert!(report.contains("glued_cube1"));
}
