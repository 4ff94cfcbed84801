//! End-to-end runs of the `leib` binary on the bundled fixtures.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.scene.json"))
}

fn leib(args: &[&str], scene: &Path) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_leib"))
        .args(args)
        .arg("--scene")
        .arg(scene)
        .output()
        .expect("leib runs");
    let report = serde_json::from_slice(&out.stdout).expect("stdout is a JSON report");
    (out.status.code().expect("exit code"), report)
}

fn temp_scene(tag: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("leib-{tag}-{}.scene.json", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn coboundary_of_flat_metric_on_coordinate_fields() {
    let args = [
        "coboundary",
        "--tensor",
        "metric",
        "--fields",
        "d1,d2,xd2",
        "--point",
        "0.3,0.7",
    ];
    let (code, report) = leib(&args, &fixture("euclidean2"));
    assert_eq!(code, 0);
    assert_eq!(report["results"]["local"], 2.0);
    assert_eq!(report["results"]["global"], 2.0);
}

#[test]
fn coboundary_structure_of_flat_metric() {
    let (code, report) = leib(
        &["coboundary", "--tensor", "metric", "--samples", "5"],
        &fixture("euclidean2"),
    );
    assert_eq!(code, 0);
    let results = &report["results"];
    assert_eq!(results["rank"], 3);
    assert!(results["tensor_part"].as_array().unwrap().is_empty());
    assert!(!results["deriv_terms"].as_array().unwrap().is_empty());
}

#[test]
fn flat_christoffel_table_is_zero() {
    let (code, report) = leib(
        &["christoffel", "--point", "0.1,-0.2"],
        &fixture("euclidean2"),
    );
    assert_eq!(code, 0);
    for kind in ["first_kind", "second_kind"] {
        let rows = report["results"][kind].as_array().unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r["value"] == 0.0), "{kind}");
    }
}

#[test]
fn sphere_christoffel_values() {
    let (code, report) = leib(&["christoffel", "--point", "0.7,1.0"], &fixture("sphere"));
    assert_eq!(code, 0);
    // Gamma^1_{22} = -sin cos, Gamma^2_{12} = cot.
    let second = report["results"]["second_kind"].as_array().unwrap();
    let find = |idx: [u64; 3]| {
        second
            .iter()
            .find(|r| r["indices"] == serde_json::json!(idx))
            .unwrap()["value"]
            .as_f64()
            .unwrap()
    };
    assert!((find([1, 2, 2]) + 0.7f64.sin() * 0.7f64.cos()).abs() < 1e-14);
    assert!((find([2, 1, 2]) - 0.7f64.cos() / 0.7f64.sin()).abs() < 1e-14);
}

#[test]
fn curvature_reports_unit_sphere_component() {
    let point = format!("{},0.3", std::f64::consts::FRAC_PI_2);
    let (code, report) = leib(
        &["curvature", "--point", &point, "--samples", "5"],
        &fixture("sphere"),
    );
    assert_eq!(code, 0);
    let comps = report["results"]["riemann"].as_array().unwrap();
    assert_eq!(comps.len(), 4);
    assert!(comps
        .iter()
        .all(|c| (c["value"].as_f64().unwrap().abs() - 1.0).abs() < 1e-12));
}

#[test]
fn variation_reports_closed_form_value() {
    let args = [
        "variation",
        "--tensor",
        "rotation",
        "--family",
        "sine_bump",
        "--metric",
        "metric",
    ];
    let (code, report) = leib(&args, &fixture("euclidean2"));
    assert_eq!(code, 0);
    let r = &report["results"];
    let expected = -4.0 / std::f64::consts::PI;
    assert!((r["first_variation_exact"].as_f64().unwrap() - expected).abs() < 1e-9);
    assert!((r["first_variation_numeric"].as_f64().unwrap() - expected).abs() < 1e-6);
    assert!((r["functional"].as_f64().unwrap()).abs() < 1e-12);
    assert!(r["geodesic_residual_max"].as_f64().unwrap() < 1e-9);
}

#[test]
fn surface_family_variation_runs() {
    let (code, report) = leib(
        &["variation", "--tensor", "area", "--family", "sheet"],
        &fixture("euclidean2"),
    );
    assert_eq!(code, 0);
    assert!(
        report["results"]["first_variation_exact"]
            .as_f64()
            .unwrap()
            .abs()
            < 1e-10
    );
}

#[test]
fn single_suite_runs_only_its_checks() {
    let (code, report) = leib(
        &["verify", "--suite", "riemann", "--samples", "5"],
        &fixture("halfplane"),
    );
    assert_eq!(code, 0);
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks
        .iter()
        .all(|c| c["name"].as_str().unwrap().starts_with("riemann.")));
    assert!(checks.iter().all(|c| c["seed"] == 42));
}

#[test]
fn unknown_names_are_reported_with_exit_two() {
    let (code, report) = leib(&["coboundary", "--tensor", "nope"], &fixture("euclidean2"));
    assert_eq!(code, 2);
    assert!(report["error"]
        .as_str()
        .unwrap()
        .contains("unknown tensor `nope`"));
    let (code, _) = leib(&["christoffel", "--point", "9,9"], &fixture("sphere"));
    assert_eq!(code, 2);
}

#[test]
fn bad_scenes_exit_two() {
    let asym = r#"{"dimension": 2, "coordinates": ["x1", "x2"], "domain": [[0, 1], [0, 1]],
                   "metrics": {"g": [["1", "x1"], ["0", "1"]]}}"#;
    let path = temp_scene("asym", asym);
    let (code, report) = leib(&["verify"], &path);
    assert_eq!(code, 2);
    assert!(report["error"]
        .as_str()
        .unwrap()
        .contains("metric not symmetric"));

    let arity = r#"{"dimension": 2, "coordinates": ["x1", "x2"], "domain": [[0, 1], [0, 1]],
                    "tensors": {"w": {"rank": 2, "coefficients": [["1", "0"], ["0"]]}}}"#;
    let path = temp_scene("arity", arity);
    let (code, report) = leib(&["verify"], &path);
    assert_eq!(code, 2);
    assert!(report["error"]
        .as_str()
        .unwrap()
        .contains("expected 2 entries"));

    let missing = PathBuf::from("/nonexistent/scene.json");
    let (code, report) = leib(&["verify"], &missing);
    assert_eq!(code, 2);
    assert!(report["error"].as_str().unwrap().contains("cannot read"));
}

#[test]
fn usage_errors_exit_two() {
    let out = Command::new(env!("CARGO_BIN_EXE_leib"))
        .args(["verify"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_leib"))
        .args(["frobnicate"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
