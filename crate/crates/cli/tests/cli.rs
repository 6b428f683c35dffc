use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gaussprop"));
    c.env_remove("GAUSSPROP_OUT");
    c
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn run(args: &[&str], scenario: &Path, out: &Path) -> Output {
    bin().args(args).arg(scenario).arg("--out").arg(out).output().unwrap()
}

fn small_evolve() -> Value {
    json!({
        "grid": {"x_min": -12.0, "x_max": 12.0, "n": 128},
        "spec": {"diffusivity": 1.0, "drift": {"kind": "linear", "k": 0.2}},
        "schedule": {"eps": 0.02, "n_steps": 20}
    })
}

#[test]
fn evolve_keeps_the_norm_on_the_shipped_free_packet() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["evolve"], &shipped("free-packet.json"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.path().join("free-packet.evolve.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[2], "norm [1]");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 201);
    for r in &rows {
        let norm: f64 = r[2].parse().unwrap();
        assert!((norm - 1.0).abs() < 1e-6);
    }
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.json", &small_evolve());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["evolve"], &scenario, &a).status.success());
    assert!(run(&["evolve"], &scenario, &b).status.success());
    for f in ["s.evolve.csv", "s.evolve.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn unknown_keys_are_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small_evolve();
    v["schedule"]["stepz"] = json!(3);
    let scenario = write(dir.path(), "s.json", &v);
    let o = run(&["evolve"], &scenario, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("s.evolve.csv").exists());
}

#[test]
fn invalid_values_are_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small_evolve();
    v["grid"]["x_max"] = json!(-20.0);
    let bad_grid = write(dir.path(), "grid.json", &v);
    assert_eq!(run(&["evolve"], &bad_grid, dir.path()).status.code(), Some(2));

    let mut v = small_evolve();
    v["schedule"]["eps"] = json!(0.0);
    let bad_eps = write(dir.path(), "eps.json", &v);
    assert_eq!(run(&["evolve"], &bad_eps, dir.path()).status.code(), Some(2));

    // the subcommand needs its own section
    let plain = write(dir.path(), "plain.json", &small_evolve());
    assert_eq!(run(&["audit"], &plain, dir.path()).status.code(), Some(2));
}

#[test]
fn unresolvable_grid_exits_with_validity_code() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({
        "grid": {"x_min": -16.0, "x_max": 16.0, "n": 64},
        "spec": {"diffusivity": 1.0, "drift": {"kind": "linear", "k": 3.0}},
        "schedule": {"eps": 0.01, "n_steps": 5}
    });
    let scenario = write(dir.path(), "s.json", &v);
    let o = run(&["evolve"], &scenario, dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn threshold_failure_still_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = serde_json::from_str::<Value>(&fs::read_to_string(shipped("default.json")).unwrap()).unwrap();
    v["moments"]["tolerance"] = json!(1e-12);
    let scenario = write(dir.path(), "m.json", &v);
    let o = run(&["moments"], &scenario, dir.path());
    assert_eq!(o.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&fs::read(dir.path().join("m.moments.json")).unwrap()).unwrap();
    assert!(report["rows"].as_array().unwrap().iter().any(|r| r["pass"] == json!(false)));
}

#[test]
fn env_sets_the_output_directory_and_the_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.json", &small_evolve());
    let (env_dir, flag_dir) = (dir.path().join("env"), dir.path().join("flag"));
    let o = bin().arg("evolve").arg(&scenario).env("GAUSSPROP_OUT", &env_dir).output().unwrap();
    assert!(o.status.success());
    assert!(env_dir.join("s.evolve.csv").exists());

    let o = bin()
        .arg("evolve")
        .arg(&scenario)
        .arg("--out")
        .arg(&flag_dir)
        .env("GAUSSPROP_OUT", dir.path().join("ignored"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(flag_dir.join("s.evolve.csv").exists());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn method_flag_overrides_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.json", &small_evolve());
    assert!(run(&["evolve", "--method", "spectral"], &scenario, dir.path()).status.success());
    let summary: Value = serde_json::from_slice(&fs::read(dir.path().join("s.evolve.json")).unwrap()).unwrap();
    assert_eq!(summary["method"], json!("spectral"));
}

#[test]
fn walk_seed_flag_changes_the_sample_and_small_ensembles_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({
        "grid": {"x_min": -10.0, "x_max": 10.0, "n": 256},
        "spec": {"diffusivity": 1.0, "drift": {"kind": "constant", "c": 0.5}},
        "schedule": {"eps": 0.05, "n_steps": 20},
        "seed": 1,
        "walk": {"particles": 20000}
    });
    let scenario = write(dir.path(), "w.json", &v);
    let mean = |args: &[&str], out: &Path| -> f64 {
        assert!(run(args, &scenario, out).status.success());
        let s: Value = serde_json::from_slice(&fs::read(out.join("w.walk.json")).unwrap()).unwrap();
        assert_eq!(s["target"], json!("closed_form"));
        s["mean"].as_f64().unwrap()
    };
    let a = mean(&["walk"], &dir.path().join("a"));
    let b = mean(&["walk"], &dir.path().join("b"));
    let c = mean(&["walk", "--seed", "2"], &dir.path().join("c"));
    assert_eq!(a, b);
    assert_ne!(a, c);

    let mut small = v.clone();
    small["walk"]["particles"] = json!(100);
    let scenario = write(dir.path(), "small.json", &small);
    assert_eq!(run(&["walk"], &scenario, dir.path()).status.code(), Some(2));
}

#[test]
fn audit_report_lists_the_shipped_verdicts() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["audit"], &shipped("variants.json"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&fs::read(out.path().join("variants.audit.json")).unwrap()).unwrap();
    let verdict = |name: &str| {
        report["cases"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["variant"] == json!(name))
            .unwrap()["verdict"]
            .clone()
    };
    assert_eq!(verdict("admissible"), json!("conserves"));
    assert_eq!(verdict("complex_D"), json!("drifts"));
    assert_eq!(verdict("no_T"), json!("drifts"));
}
