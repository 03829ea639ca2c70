//! End-to-end smoke tests for the `martenscale` binary: exit codes and the
//! shape of each command's primary output.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_martenscale"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

#[test]
fn normals_reports_six_directions() {
    let out = run(&["normals", "--scenario", "unit_square"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["count"], 6);
    assert_eq!(v["angles_deg"].as_array().unwrap().len(), 6);
}

#[test]
fn dcheck_classifies_square_as_generic() {
    let out = run(&["dcheck", "--scenario", "unit_square"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["class"], "generic");
    assert!((v["d"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(v["edges"].as_array().unwrap().len(), 4);
}

#[test]
fn dcheck_classifies_triangle_as_compatible() {
    let out = run(&["dcheck", "--scenario", "compatible_triangle"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["class"], "compatible");
    assert!(v["d"].as_f64().unwrap() < 1e-10);
}

#[test]
fn construct_star_reports_continuity() {
    let out = run(&[
        "construct",
        "--scenario",
        "compatible_triangle",
        "--eps",
        "0.01",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["kind"], "star");
    assert!(v["continuity"]["max_trace_mismatch"].as_f64().unwrap() <= 1e-10);
    assert!(v["total"].as_f64().unwrap() > 0.0);
}

#[test]
fn fit_roundtrips_a_sweep_report() {
    let dir = std::env::temp_dir().join("martenscale-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("triangle.csv");
    let out = run(&[
        "sweep",
        "--scenario",
        "compatible_triangle",
        "--eps-max",
        "0.0625",
        "--eps-min",
        "0.0009765625",
        "--eps-count",
        "7",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(Path::new(&csv).is_file());

    let out = run(&["fit", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["fits"][0]["source"], "construction");
    assert_eq!(v["fits"][0]["fit"]["verdict"], "linear");
}

#[test]
fn selftest_passes_and_prints_the_table() {
    let out = run(&["selftest"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("22/22 checks passed"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn usage_errors_exit_with_2() {
    let out = run(&["sweep", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_scenario_json_exits_with_3() {
    let dir = std::env::temp_dir().join("martenscale-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.json");
    std::fs::write(&path, "{\"name\": \"x\", \"domain\": 7}").unwrap();
    let out = run(&["dcheck", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_preset_exits_with_3() {
    let out = run(&["dcheck", "--scenario", "no_such_preset"]);
    assert_eq!(out.status.code(), Some(3));
}
