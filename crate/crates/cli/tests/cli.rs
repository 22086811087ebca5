use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const MINIMAL: &str = r#"{
    "dimension": 2,
    "effects": {
        "p0": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
        "p1": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
        "n0": [[[0.7, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.2, 0.0]]],
        "n1": [[[0.3, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.8, 0.0]]]
    },
    "states": {
        "mix": [[[0.6, 0.0], [0.1, 0.1]], [[0.1, -0.1], [0.4, 0.0]]]
    },
    "observables": {
        "Z": { "up": "p0", "down": "p1" },
        "N": { "0": "n0", "1": "n1" }
    },
    "instruments": {
        "L": { "type": "luders", "observable": "N" },
        "LZ": { "type": "luders", "observable": "Z" },
        "H": { "type": "holevo", "observable": "N", "state": "mix" }
    },
    "checks": ["duality", "lemma21", "thm41", "measured"],
    "trials": 10
}"#;

fn qmi() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qmi"));
    c.env_remove("QMI_TOL");
    c
}

fn scenario(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (
        status.code().unwrap(),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

fn zero_wall_time(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for (k, x) in map.iter_mut() {
                if k == "wall_time" {
                    *x = Value::from(0.0);
                } else {
                    zero_wall_time(x);
                }
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(zero_wall_time),
        _ => {}
    }
}

fn read_report(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    zero_wall_time(&mut v);
    v
}

#[test]
fn minimal_scenario_passes() {
    let dir = TempDir::new().unwrap();
    let path = scenario(&dir, "s.json", MINIMAL);
    let (code, out, err) = run(qmi().arg("verify").arg(&path));
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["reports"].as_array().unwrap().len(), 4);
}

#[test]
fn every_suite_passes_on_the_bundled_scenario() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/qubit.json");
    let (code, out, err) = run(qmi().arg("verify").arg(&path).args(["--trials", "10"]));
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 12);
}

#[test]
fn invalid_effect_is_named() {
    let dir = TempDir::new().unwrap();
    let text = MINIMAL.replace("[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]", "[[[1.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]");
    let path = scenario(&dir, "s.json", &text);
    let (code, _, err) = run(qmi().arg("verify").arg(&path));
    assert_eq!(code, 2);
    assert!(err.contains("effect \"p0\""), "{err}");
}

#[test]
fn dangling_reference_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let text = MINIMAL.replace(r#""state": "mix""#, r#""state": "nowhere""#);
    let path = scenario(&dir, "s.json", &text);
    let (code, _, err) = run(qmi().arg("verify").arg(&path));
    assert_eq!(code, 2);
    assert!(err.contains("unknown state \"nowhere\""), "{err}");
}

#[test]
fn parse_error_reports_its_line() {
    let dir = TempDir::new().unwrap();
    let path = scenario(&dir, "s.json", "{\n  \"dimension\": 2,\n  oops\n}");
    let (code, _, err) = run(qmi().arg("verify").arg(&path));
    assert_eq!(code, 2);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn unknown_field_and_check_are_rejected() {
    let dir = TempDir::new().unwrap();
    let path = scenario(&dir, "a.json", &MINIMAL.replace(r#""trials": 10"#, r#""trails": 10"#));
    assert_eq!(run(qmi().arg("verify").arg(&path)).0, 2);
    let path = scenario(&dir, "b.json", &MINIMAL.replace(r#""measured"]"#, r#""nonsense"]"#));
    assert_eq!(run(qmi().arg("verify").arg(&path)).0, 2);
}

#[test]
fn tiny_tolerance_reports_residuals() {
    let dir = TempDir::new().unwrap();
    let path = scenario(&dir, "s.json", MINIMAL);
    let (code, out, _) = run(qmi().arg("verify").arg(&path).args(["--tol", "1e-30"]));
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["passed"], false);
    let failures: Vec<&Value> = v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| r["failures"].as_array().unwrap())
        .collect();
    assert!(!failures.is_empty());
    assert!(failures.iter().all(|f| f["residual"].as_f64().unwrap() > 1e-30));
}

#[test]
fn env_tolerance_is_honoured() {
    let dir = TempDir::new().unwrap();
    let path = scenario(&dir, "s.json", MINIMAL);
    assert_eq!(run(qmi().env("QMI_TOL", "1e-30").arg("verify").arg(&path)).0, 1);
    // the flag wins over the environment
    assert_eq!(run(qmi().env("QMI_TOL", "1e-30").arg("verify").arg(&path).args(["--tol", "1e-9"])).0, 0);
    let (code, _, err) = run(qmi().env("QMI_TOL", "tiny").arg("verify").arg(&path));
    assert_eq!(code, 2);
    assert!(err.contains("QMI_TOL"), "{err}");
}

#[test]
fn zero_trials_gives_an_empty_report() {
    let dir = TempDir::new().unwrap();
    let path = scenario(&dir, "s.json", MINIMAL);
    let (code, out, err) = run(qmi().arg("verify").arg(&path).args(["--trials", "0"]));
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["trials"], 0);
    assert_eq!(v["passed"], true);
}

#[test]
fn reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let path = scenario(&dir, "s.json", MINIMAL);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let c = dir.path().join("c.json");
    for (out, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let (code, stdout, _) = run(qmi().arg("verify").arg(&path).args(["--seed", seed, "--report"]).arg(out));
        assert_eq!(code, 0);
        assert!(stdout.is_empty());
    }
    assert_eq!(read_report(&a), read_report(&b));
    assert_ne!(read_report(&a), read_report(&c));
}

#[test]
fn demo_lines_cite_their_example() {
    let (code, out, _) = run(qmi().args(["demo", "example5"]));
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let lines = v["lines"].as_array().unwrap();
    assert!(!lines.is_empty());
    assert!(lines.iter().all(|l| l["citation"].as_str().unwrap().starts_with("example5: ")));
    assert_eq!(run(qmi().args(["demo", "example9"])).0, 2);
}

#[test]
fn every_demo_passes() {
    for k in 1..=8 {
        let (code, _, err) = run(qmi().args(["demo", &format!("example{k}")]));
        assert_eq!(code, 0, "example{k}: {err}");
    }
}

#[test]
fn search_on_noisy_luders_finds_candidates() {
    let dir = TempDir::new().unwrap();
    let path = scenario(&dir, "s.json", MINIMAL);
    let (code, out, err) = run(qmi().arg("search").arg(&path).args(["--family", "L", "--trials", "20"]));
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["kind"], "luders");
    assert_eq!(v["tested"], 20);
    let luders = &v["luders"];
    assert!(luders["min_singular_value"].as_f64().unwrap() > 0.0);
    assert!(luders["candidates"].as_array().unwrap().iter().any(|c| c["certified"] == true));
}

#[test]
fn search_on_holevo_and_sharp_luders_finds_witnesses() {
    let dir = TempDir::new().unwrap();
    let path = scenario(&dir, "s.json", MINIMAL);
    for (family, kind) in [("H", "holevo"), ("LZ", "sharp-luders")] {
        let (code, out, err) = run(qmi().arg("search").arg(&path).args(["--family", family, "--trials", "10"]));
        assert_eq!(code, 0, "{err}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["kind"], kind);
        assert_eq!(v["witnesses"], v["tested"]);
    }
    assert_eq!(run(qmi().arg("search").arg(&path).args(["--family", "Q"])).0, 2);
}
