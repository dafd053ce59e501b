//! CLI integration: subcommand outputs, determinism and exit codes.
//! Exit code contract: 0 ok, 1 verification failure, 2 quadrature,
//! 3 partition, 4 solver, 64 usage.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logriemann"))
}

fn write_config(dir: &std::path::Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("logriemann-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

const GAUSS2: &str = r#"{
    "map": { "P": [[0,0],[0,0],[1,0]], "Q": [[1,0]] },
    "window": { "bbox": { "min": [-4,-4], "max": [4,4] }, "k": 1, "grid_n": 60 }
}"#;

#[test]
fn asymptotics_outputs_certified_values() {
    let dir = tempdir();
    let config = write_config(&dir, "gauss2.json", GAUSS2);
    let out = run(&["asymptotics", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let values: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let values = values.as_array().unwrap();
    assert_eq!(values.len(), 2);
    let w = values[0]["w"].as_array().unwrap();
    assert!((w[1].as_f64().unwrap() - 0.886226925452758).abs() < 1e-10);
}

#[test]
fn skeleton_output_is_byte_identical_across_runs() {
    let dir = tempdir();
    let config = write_config(&dir, "gauss2-skel.json", GAUSS2);
    let a = run(&["skeleton", "--config", config.to_str().unwrap()]);
    let b = run(&["skeleton", "--config", config.to_str().unwrap()]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let skeleton: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(skeleton["nodes"].as_array().unwrap().len(), 2);
}

#[test]
fn render_produces_layered_svg() {
    let dir = tempdir();
    let config = write_config(&dir, "gauss2-render.json", GAUSS2);
    let out = run(&["render", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let svg = String::from_utf8(out.stdout).unwrap();
    for layer in ["domains", "streamlines", "separatrices", "nodes"] {
        assert!(svg.contains(&format!(r#"<g id="{layer}">"#)), "missing layer {layer}");
    }
}

#[test]
fn flow_reports_level_curve() {
    let dir = tempdir();
    let config = write_config(&dir, "gauss2-flow.json", GAUSS2);
    let out = run(&[
        "flow",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "0.5,0.5",
        "--t0",
        "-2",
        "--t1",
        "2",
    ]);
    assert!(out.status.success());
    let curve: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(curve["samples"].as_array().unwrap().len() > 10);
}

#[test]
fn sc_solves_symmetric_parameters() {
    let dir = tempdir();
    let config = write_config(&dir, "gauss2-sc.json", GAUSS2);
    let out = run(&["sc", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let solve: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(solve["residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn verify_single_check_passes() {
    let out = run(&["verify", "--check", "closed-form-exponential"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["checks"].as_array().unwrap().len(), 1);
    assert_eq!(report["checks"][0]["pass"], true);
}

#[test]
fn asymptotics_with_constant_p_is_empty() {
    let dir = tempdir();
    let config = write_config(
        &dir,
        "d0.json",
        r#"{ "map": { "P": [[0,0]], "Q": [[1,0],[1,0]] } }"#,
    );
    let out = run(&["asymptotics", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let values: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(values.as_array().unwrap().len(), 0);
}

#[test]
fn skeleton_matches_golden_file() {
    let golden_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let out = run(&[
        "skeleton",
        "--config",
        golden_dir.join("skeleton_cubic.config.json").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let golden = std::fs::read_to_string(golden_dir.join("skeleton_cubic.json")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim_end(), golden.trim_end());
}

#[test]
fn verify_fails_when_quadrature_tolerance_loosened() {
    let dir = tempdir();
    let config = write_config(
        &dir,
        "loose.json",
        r#"{ "map": { "P": [[0,0],[0,0],[1,0]], "Q": [[1,0]], "quad_tol": 1e-2 } }"#,
    );
    let out = run(&["verify", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["asymptotic-values"]);
}

#[test]
fn sc_spec_straightness_report() {
    let dir = tempdir();
    // wedge alpha = 3: A = 6 e^{4 pi i} = 6
    let spec = write_config(
        &dir,
        "wedge.json",
        r#"{
            "vertices": [{ "z": [-1.0, 0.0], "alpha": 3.0 }],
            "ends": [{ "z": [1.0, 0.0], "beta": 3.0 }],
            "A": [6.0, 0.0], "B": [1.0, 0.0], "C": [0.0, 0.0]
        }"#,
    );
    let out = run(&["sc", "--spec", spec.to_str().unwrap()]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["sides"].as_array().unwrap().len(), 2);

    let bad = write_config(&dir, "bad-spec.json", "{ not json");
    assert_eq!(run(&["sc", "--spec", bad.to_str().unwrap()]).status.code(), Some(64));
}

#[test]
fn usage_errors_exit_64() {
    // unknown subcommand
    assert_eq!(run(&["no-such-command"]).status.code(), Some(64));
    // unknown check id
    assert_eq!(run(&["verify", "--check", "bogus"]).status.code(), Some(64));
    // malformed config JSON
    let dir = tempdir();
    let config = write_config(&dir, "broken.json", "{ not json");
    assert_eq!(
        run(&["asymptotics", "--config", config.to_str().unwrap()]).status.code(),
        Some(64)
    );
    // missing config file
    assert_eq!(run(&["skeleton", "--config", "/nonexistent.json"]).status.code(), Some(64));
}

#[test]
fn sc_rejects_non_symmetric_map_as_usage_error() {
    // the symmetric solver only accepts monic pure-power P with constant Q
    let dir = tempdir();
    let config = write_config(
        &dir,
        "shifted.json",
        r#"{
            "map": { "P": [[1,0],[0,0],[1,0]], "Q": [[1,0]] },
            "window": { "bbox": { "min": [-4,-4], "max": [4,4] }, "k": 1, "grid_n": 60 }
        }"#,
    );
    let out = run(&["sc", "--config", config.to_str().unwrap()]);
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn help_exits_zero() {
    assert!(run(&["--help"]).status.success());
}
