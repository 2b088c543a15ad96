//! End-to-end tests of the `kgs` binary: exit codes, report envelopes,
//! CSV and series artifacts, and determinism of the emitted bytes.

use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn kgs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgs"))
        .args(args)
        .env_remove("KGS_MAX_PATHS")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exits normally")
}

#[test]
fn validate_passes_a_good_graph_and_echoes_the_document() {
    let out = kgs(&["validate", &fixture("b1.json")]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["schema"], "kgs-report/1");
    assert_eq!(r["command"], "validate");
    for check in [
        "commuting",
        "source_free",
        "strongly_connected",
        "rho_exceeds_one",
        "diameter_hypothesis",
    ] {
        assert_eq!(r["results"][check]["passed"], true, "{check}");
    }
    // the echoed document round-trips to the file's contents
    let original: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("b1.json")).unwrap()).unwrap();
    assert_eq!(r["inputs"]["graph"], original);
}

#[test]
fn validate_flags_a_noncommuting_pair() {
    let out = kgs(&["validate", &fixture("noncommuting.json")]);
    assert_eq!(code(&out), 2);
    let r = report(&out);
    assert_eq!(r["results"]["commuting"]["passed"], false);
    let detail = r["results"]["commuting"]["detail"].as_str().unwrap();
    assert!(detail.contains("A_1") && detail.contains("A_2"), "{detail}");
}

#[test]
fn schema_errors_name_the_field_and_exit_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    std::fs::write(&missing, r#"{"k":1,"vertices":["v"]}"#).unwrap();
    let out = kgs(&["validate", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("adjacency"), "{err}");

    let ragged = dir.path().join("ragged.json");
    std::fs::write(
        &ragged,
        r#"{"k":1,"vertices":["a","b"],"adjacency":[[[1,1],[1]]]}"#,
    )
    .unwrap();
    let out = kgs(&["validate", ragged.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("adjacency[0][1]"), "{err}");
}

#[test]
fn measure_emits_the_expected_csv_rows() {
    let out = kgs(&[
        "measure",
        &fixture("b2.json"),
        "--depth",
        "2",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "path,degree,M,w_delta,diam");
    assert_eq!(lines.len(), 7, "header plus six cylinders");
    for line in &lines[1..] {
        assert!(line.contains("0.16666666666666666"), "{line}");
    }
}

#[test]
fn measure_honours_the_enumeration_cap_override() {
    let out = Command::new(env!("CARGO_BIN_EXE_kgs"))
        .args(["measure", &fixture("b2.json"), "--depth", "2"])
        .env("KGS_MAX_PATHS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cap"), "{err}");
}

#[test]
fn zeta_matches_the_geometric_closed_form() {
    let out = kgs(&[
        "zeta",
        &fixture("b1.json"),
        "--s",
        "1.0",
        "--depth",
        "60",
    ]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let sum = r["results"]["partial_sum"].as_f64().unwrap();
    assert!((sum - 2.0).abs() <= 1e-9, "partial sum {sum}");
    assert_eq!(r["results"]["class"], "converged");
}

#[test]
fn dixmier_routes_agree_and_shallow_probes_exit_undecided() {
    let closed = kgs(&["dixmier", &fixture("b1.json"), "--gamma", "0:(0,0,1)"]);
    assert_eq!(code(&closed), 0);
    let r = report(&closed);
    assert_eq!(r["results"]["route"], "closed");
    let v = r["results"]["value"].as_f64().unwrap();
    assert!((v - 0.5).abs() <= 1e-12, "closed value {v}");

    let numeric = kgs(&[
        "dixmier",
        &fixture("b1.json"),
        "--gamma",
        "0:(0,0,1)",
        "--route",
        "numeric",
        "--steps",
        "3",
        "--depth",
        "40",
    ]);
    assert_eq!(code(&numeric), 3, "shallow numeric run must be undecided");
}

#[test]
fn hausdorff_recovers_the_exponent_and_writes_the_series() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("sums.txt");
    let out = kgs(&[
        "hausdorff",
        &fixture("b1.json"),
        "--emit-series",
        series.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let dim = report(&out)["results"]["dimension"].as_f64().unwrap();
    assert!((dim - 0.5).abs() <= 0.02, "dimension {dim}");
    let text = std::fs::read_to_string(&series).unwrap();
    assert_eq!(text.lines().count(), 13, "cover sums for q = 0..=12");
    for line in text.lines() {
        assert_eq!(line.split(' ').count(), 2, "two columns: {line}");
    }
}

#[test]
fn wavelet_export_is_consistent_with_its_gram_report() {
    let out = kgs(&[
        "wavelets",
        &fixture("b2.json"),
        "--level",
        "0",
        "--refined",
        "1",
    ]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["results"]["orthonormal"], true);
    let dim = r["results"]["dim"].as_u64().unwrap();

    let csv = kgs(&[
        "wavelets",
        &fixture("b2.json"),
        "--level",
        "0",
        "--refined",
        "1",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(csv.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len() as u64, dim + 1, "one row per basis vector");
    assert!(lines[0].starts_with("vector,"), "{}", lines[0]);
    assert!(lines[0].contains("(0,0,0)"), "columns name the cylinders");
}

#[test]
fn reshaped_wavelets_validate_their_shape_flags() {
    let bad_shape = kgs(&[
        "wavelets",
        &fixture("b4.json"),
        "--level",
        "0",
        "--J",
        "2",
    ]);
    assert_eq!(code(&bad_shape), 2);
    let bad_slice = kgs(&[
        "wavelets",
        &fixture("b4.json"),
        "--level",
        "0",
        "--J",
        "2,1",
        "--slice",
        "4",
    ]);
    assert_eq!(code(&bad_slice), 2);
    let good = kgs(&[
        "wavelets",
        &fixture("b4.json"),
        "--level",
        "0",
        "--J",
        "2,1",
        "--slice",
        "2",
    ]);
    assert_eq!(code(&good), 0);
}

#[test]
fn laplacian_reports_the_eigenvalue_and_residual() {
    let out = kgs(&[
        "laplacian",
        &fixture("b1.json"),
        "--s",
        "2.0",
        "--gamma",
        "0:",
    ]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let eig = r["results"]["eigenvalue"].as_f64().unwrap();
    assert!((eig + 4.0).abs() <= 1e-9, "eigenvalue {eig}");
    let resid = r["results"]["max_relative_residual"].as_f64().unwrap();
    assert!(resid <= 1e-10, "residual {resid}");
}

#[test]
fn dirac_reports_multiplicities_and_alignment() {
    let out = kgs(&[
        "dirac",
        &fixture("b2.json"),
        "--depth",
        "2",
        "--alpha",
        "linear:1",
    ]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let mults: Vec<u64> = r["results"]["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|pair| pair[1].as_u64().unwrap())
        .collect();
    assert_eq!(mults, vec![1, 5, 30]);
    let angle = r["results"]["max_angle_to_wavelets"].as_f64().unwrap();
    assert!(angle <= 1e-8, "angle {angle}");
}

#[test]
fn generator_relation_residuals_stay_at_roundoff() {
    let out = kgs(&["ck-check", &fixture("b4.json"), "--depth", "2"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let max = r["results"]["max_residual"].as_f64().unwrap();
    assert!(max <= 1e-12, "max residual {max}");
}

#[test]
fn commutator_norms_are_stable_across_depths() {
    let out = kgs(&[
        "commutator",
        &fixture("b1.json"),
        "--lambda",
        "0:(0,0,0)",
        "--mu",
        "0",
        "--depths",
        "4..6",
    ]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let norms: Vec<f64> = r["results"]["norms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n["norm"].as_f64().unwrap())
        .collect();
    assert_eq!(norms.len(), 3);
    let hi = norms.iter().cloned().fold(f64::MIN, f64::max);
    let lo = norms.iter().cloned().fold(f64::MAX, f64::min);
    assert!((hi - lo) / hi < 0.05, "norms {norms:?}");
}

#[test]
fn identical_invocations_emit_identical_bytes() {
    let args = [
        "zeta",
        &fixture("b2.json"),
        "--s",
        "0.8",
        "--depth",
        "40",
    ];
    let first = kgs(&args);
    let second = kgs(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout, "stdout must be deterministic");
}
