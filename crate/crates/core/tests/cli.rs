use std::fs;

use moment_forge::cli::{run_cli, EXIT_OK, EXIT_USAGE, EXIT_VERDICT};
use serde_json::Value;

fn run(args: &[&str]) -> i32 {
    run_cli(std::iter::once("moment-forge").chain(args.iter().copied()))
}

fn read_json(path: &std::path::Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn derive_writes_system_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sys.json");
    let code = run(&["derive", "--model", "HME1D", "-M", "3", "--state", "maxwellian:1,0,1", "--tau", "0.5", "-o", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v = read_json(&out);
    assert_eq!(v["kind"], "regularized");
    assert_eq!(v["B"].as_array().unwrap().len(), 4);
    assert_eq!(v["A"].as_array().unwrap().len(), 1);
    assert_eq!(v["variables"].as_array().unwrap().len(), 4);
    assert_eq!(v["ordering"][3]["alpha"][0], 3);
}

#[test]
fn derive_csv_needs_existing_directory() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(run(&["derive", "--model", "G13", "--state", "sample:4", "--format", "csv", "-o", d]), EXIT_OK);
    for name in ["B.csv", "F1.csv", "F3.csv", "source.csv", "ordering.csv", "metadata.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let rows = fs::read_to_string(dir.path().join("B.csv")).unwrap();
    assert_eq!(rows.lines().count(), 13);
    let missing = dir.path().join("nope");
    assert_eq!(
        run(&["derive", "--model", "G13", "--state", "sample:4", "--format", "csv", "-o", missing.to_str().unwrap()]),
        EXIT_USAGE
    );
}

#[test]
fn spectrum_exit_code_follows_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = out.to_str().unwrap();
    assert_eq!(run(&["spectrum", "--model", "HMEND", "-M", "3", "--state", "maxwellian:1,0.2,0,1.5", "--direction", "1,1", "-o", o]), EXIT_OK);
    let v = read_json(&out);
    assert_eq!(v["dim"], 2);
    assert_eq!(v["report"]["verdict"], "hyperbolic");

    let state = r#"{"rho":1.0,"u":[0.0],"theta":1.0,"f":{"3":1.0}}"#;
    assert_eq!(run(&["spectrum", "--model", "Grad1D", "-M", "3", "--state", state, "-o", o]), EXIT_VERDICT);
    assert_eq!(read_json(&out)["report"]["verdict"], "non-real");
}

#[test]
fn scan_reports_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.json");
    let code = run(&["scan", "--model", "Grad1D", "-M", "3", "--trials", "200", "--witnesses", "2", "-o", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_VERDICT);
    let v = read_json(&out);
    assert_eq!(v["trials"], 200);
    assert_eq!(v["witnesses"].as_array().unwrap().len(), 2);
    let code = run(&["scan", "--model", "HR13", "--trials", "50", "--symmetrization", "-o", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(read_json(&out)["hyperbolic_fraction"], 1.0);
}

#[test]
fn simulate_writes_snapshots_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let code = run(&["simulate", "--model", "HME1D", "-M", "3", "--cells", "40", "--t-end", "0.05", "--snapshots", "2", "-o", d]);
    assert_eq!(code, EXIT_OK);
    for k in 0..3 {
        assert!(dir.path().join(format!("snapshot_{k:04}.csv")).exists());
    }
    let v = read_json(&dir.path().join("diagnostics.json"));
    assert_eq!(v["diagnostics"]["completed"], true);
    assert_eq!(v["snapshot_times"].as_array().unwrap().len(), 3);

    let code = run(&["simulate", "--model", "Grad1D", "-M", "4", "--initial", "sod-heat-flux", "--cells", "20", "-o", d]);
    assert_eq!(code, EXIT_VERDICT);
    let v = read_json(&dir.path().join("diagnostics.json"));
    assert_eq!(v["diagnostics"]["abort"]["reason"], "non-hyperbolic");
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["derive", "--model", "Nope", "--state", "maxwellian:1,0,1"]), EXIT_USAGE);
    assert_eq!(run(&["derive", "--model", "HME1D", "--state", "maxwellian:1,0"]), EXIT_USAGE);
    assert_eq!(run(&["spectrum", "--model", "HME1D", "--state", "maxwellian:1,0,-1"]), EXIT_USAGE);
    assert_eq!(run(&["simulate", "--model", "HME1D", "-o", "/definitely/not/here"]), EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
}

#[test]
fn validate_and_invariance_pass_for_regularized_models() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = out.to_str().unwrap();
    assert_eq!(run(&["validate", "--model", "OrderedRegularized", "-M", "4", "-D", "2", "-o", o]), EXIT_OK);
    assert_eq!(read_json(&out)["projection"]["pass"], true);
    assert_eq!(run(&["invariance", "--model", "AHME", "--state", "sample:9,0.5", "--rotations", "5", "-o", o]), EXIT_OK);
    assert_eq!(read_json(&out)["dim"], 3);
}
