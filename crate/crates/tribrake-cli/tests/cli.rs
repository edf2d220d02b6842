use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tribrake"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

fn run(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> i32 {
    bin().arg(sub).arg("--config").arg(cfg).arg("--out").arg(out).args(extra).status().unwrap().code().unwrap()
}

const EQUAL: &str = r#"{"masses": [1, 1, 1], "h": 1, "seed": 5, "syzygy": {"samples": 60}}"#;

#[test]
fn bad_config_exits_with_2() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(d.path(), r#"{"masses": [1, 1, 1], "h": 1}"#);
    assert_eq!(run("winding", &cfg, &d.path().join("out"), &[]), 2);
    let cfg = write_config(d.path(), r#"{"masses": [1, 1, 1], "h": 1, "seed": 0, "jm": {"nodes": 2}}"#);
    assert_eq!(run("winding", &cfg, &d.path().join("out"), &[]), 2);
    assert_eq!(bin().arg("winding").status().unwrap().code(), Some(2));
}

#[test]
fn numerical_failure_writes_error_json() {
    let d = TempDir::new().unwrap();
    // no sign change of the shooting function on this bracket
    let cfg = write_config(d.path(), r#"{"masses": [1, 1, 1], "h": 1, "seed": 0, "iso": {"threshold_bracket": [3, 4]}}"#);
    let out = d.path().join("out");
    assert_eq!(run("iso-admissible", &cfg, &out, &[]), 3);
    let e: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(e["kind"], "numerical");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("iso-admissible.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "error");
}

#[test]
fn same_seed_gives_identical_files() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(d.path(), EQUAL);
    let (a, b, c) = (d.path().join("a"), d.path().join("b"), d.path().join("c"));
    assert_eq!(run("syzygy-map", &cfg, &a, &["--threads", "1"]), 0);
    assert_eq!(run("syzygy-map", &cfg, &b, &["--threads", "3"]), 0);
    assert_eq!(run("syzygy-map", &cfg, &c, &["--seed", "6"]), 0);
    let read = |p: &Path| fs::read(p.join("syzygy_map.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("syzygy-map.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["seed"], 5);
    assert_eq!(m["outputs"][0]["file"], "syzygy_map.csv");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn image_scan_has_one_row_per_grid_point() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(d.path(), EQUAL);
    let out = d.path().join("out");
    assert_eq!(run("image-scan", &cfg, &out, &[]), 0);
    let mut r = csv::Reader::from_path(out.join("image_scan.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 720);
    for row in &rows {
        let ty: u8 = row[8].parse().unwrap();
        assert!((1..=3).contains(&ty));
    }
}

#[test]
fn isosceles_admissibility_output() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(d.path(), r#"{"masses": [1, 1, 1], "h": 1, "seed": 0, "iso": {"threshold_bracket": [2, 3], "threshold_tol": 1e-3}}"#);
    let out = d.path().join("out");
    assert_eq!(run("iso-admissible", &cfg, &out, &[]), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("iso_admissible.json")).unwrap()).unwrap();
    assert_eq!(v["admissible"], true);
    assert!(v["v1"].as_f64().unwrap() < 0.0);
    assert!(v["v2"].as_f64().unwrap() > 0.0);
    assert!(v["v3"].as_f64().unwrap() < 0.0);
    assert!((v["threshold"].as_f64().unwrap() - 2.662).abs() < 0.01);
}

#[test]
fn restpoints_table() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(d.path(), EQUAL);
    let out = d.path().join("out");
    assert_eq!(run("restpoints", &cfg, &out, &[]), 0);
    let mut r = csv::Reader::from_path(out.join("restpoints.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 10);
    let v = |name: &str| -> f64 { rows.iter().find(|r| &r[0] == name).unwrap()[3].parse().unwrap() };
    assert!((v("L+") - 6f64.sqrt()).abs() < 1e-12);
    assert!((v("L-") + 6f64.sqrt()).abs() < 1e-12);
    assert!((v("L'+") - 6f64.sqrt()).abs() < 1e-12);
}

#[test]
fn help_lists_subcommands() {
    let out = bin().arg("--help").output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("verify-all"));
}
