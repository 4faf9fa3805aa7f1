use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use almost_anosov::MapSpec;
use tempfile::TempDir;

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_almost-anosov"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_spec(dir: &Path, name: &str, spec: &MapSpec) {
    fs::write(dir.join(name), spec.to_json()).unwrap();
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn validate_default_spec() {
    let tmp = TempDir::new().unwrap();
    write_spec(tmp.path(), "spec.json", &MapSpec::default());
    let out = bin(tmp.path(), &["validate", "--config", "spec.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "[]");
    let m = manifest(&tmp.path().join("o"));
    assert_eq!(m["command"], "validate");
    assert_eq!(m["exit_code"], 0);
}

#[test]
fn validate_parabolic_matrix_exits_1() {
    let tmp = TempDir::new().unwrap();
    write_spec(tmp.path(), "bad.json", &MapSpec { matrix: [[1, 1], [0, 1]], ..MapSpec::default() });
    let out = bin(tmp.path(), &["validate", "--config", "bad.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    let errors: Vec<String> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(errors.iter().any(|e| e.contains("A not hyperbolic")), "{errors:?}");
}

#[test]
fn large_r1_stops_at_validation() {
    let tmp = TempDir::new().unwrap();
    write_spec(tmp.path(), "r1.json", &MapSpec { r1: 0.3, ..MapSpec::default() });
    let out = bin(tmp.path(), &["all", "--quick", "--config", "r1.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    let m = manifest(&tmp.path().join("o"));
    assert_eq!(m["exit_code"], 1);
    assert!(m["outputs"].as_array().unwrap().is_empty());
}

#[test]
fn usage_and_config_errors_exit_3() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(bin(tmp.path(), &["frobnicate"]).status.code(), Some(3));
    assert_eq!(bin(tmp.path(), &["validate", "--config", "missing.json"]).status.code(), Some(3));
    fs::write(tmp.path().join("junk.json"), "{\"A\": 3}").unwrap();
    assert_eq!(bin(tmp.path(), &["validate", "--config", "junk.json"]).status.code(), Some(3));
    assert_eq!(bin(tmp.path(), &["clt", "--observable", "nope", "--out", "o"]).status.code(), Some(3));
}

#[test]
fn pressure_writes_one_row_per_t() {
    let tmp = TempDir::new().unwrap();
    write_spec(tmp.path(), "spec.json", &MapSpec::default());
    let out = bin(
        tmp.path(),
        &["pressure", "--config", "spec.json", "--t", "-0.5,0,0.5,1,1.5", "--grid", "256", "--out", "p"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_path(tmp.path().join("p/pressure.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["t", "pressure", "lambda", "residual", "iterations", "grid_n"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    let p0: f64 = rows[1][1].parse().unwrap();
    assert!((p0 - 0.9624).abs() < 0.05 * 0.9624);
}

#[test]
fn fixed_seed_gives_identical_csv() {
    let tmp = TempDir::new().unwrap();
    for dir in ["a", "b"] {
        let out = bin(tmp.path(), &["returns", "--samples", "4000", "--seed", "7", "--out", dir]);
        assert_eq!(out.status.code(), Some(0));
        let out = bin(tmp.path(), &["correlations", "--orbit-len", "100000", "--n-max", "5", "--seed", "7", "--out", dir]);
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["returns.csv", "correlations.csv"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn config_params_fill_flags() {
    let tmp = TempDir::new().unwrap();
    let cfg = format!(r#"{{"map": {}, "seed": 3, "params": {{"steps": 5}}}}"#, MapSpec::default().to_json());
    fs::write(tmp.path().join("run.json"), cfg).unwrap();
    let out = bin(tmp.path(), &["orbit", "--config", "run.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(tmp.path().join("o/orbit.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
    assert_eq!(manifest(&tmp.path().join("o"))["root_seed"], 3);
}

#[test]
fn quick_run_lists_every_criterion() {
    let tmp = TempDir::new().unwrap();
    let out = bin(tmp.path(), &["all", "--quick", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&tmp.path().join("o"));
    let ids: Vec<String> = m["assertions"].as_array().unwrap().iter().map(|a| a["id"].as_str().unwrap().to_string()).collect();
    let expected: Vec<String> = (1..=13).map(|k| format!("AC-{k}")).collect();
    assert_eq!(ids, expected);
    let stages: Vec<&str> = m["stages"].as_array().unwrap().iter().map(|s| s[0].as_str().unwrap()).collect();
    assert_eq!(
        stages,
        ["validate", "certify", "homotopy", "lyapunov", "returns", "distortion", "pressure", "srb", "correlations", "clt"]
    );
    for f in ["acceptance.csv", "pressure.csv", "returns.csv", "correlations.csv", "srb_density.csv"] {
        assert!(tmp.path().join("o").join(f).exists(), "{f}");
    }
}
