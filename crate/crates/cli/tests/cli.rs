use std::process::{Command, Output};

fn hardy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardy"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn solve_classical_ground_state() {
    let out = hardy(&[
        "solve", "--p", "2", "--q", "2", "--interval", "0,1", "--u", "1", "--v", "1", "--n", "0", "--grid-level", "12",
        "--tol", "1e-12",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let lambda = doc["result"]["lambda"].as_f64().unwrap();
    assert!((lambda - 2.46740).abs() < 1e-5, "{lambda}");
    assert_eq!(doc["result"]["nodal_count"], 0);
    assert_eq!(doc["manifest"]["command"], "solve");
    assert_eq!(doc["manifest"]["spec"]["grid_level"], 12);
}

#[test]
fn non_positive_weight_is_a_usage_error() {
    let out = hardy(&["solve", "--p", "2", "--q", "2", "--u", "x-2"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not positive"), "{err}");
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(hardy(&["solve", "--p", "0.5", "--q", "2"]).status.code(), Some(1));
    assert_eq!(hardy(&["solve", "--q", "2"]).status.code(), Some(1));
    assert_eq!(hardy(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hardy(&["asymptote", "--p", "2", "--q", "2", "--nmax", "3"]).status.code(), Some(1));
    assert_eq!(hardy(&["--help"]).status.code(), Some(0));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "solve", "--p", "3", "--q", "2", "--n", "3", "--mode", "max", "--starts", "16", "--seed", "7", "--grid-level",
        "10",
    ];
    let a = hardy(&args);
    let b = hardy(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["result"]["nodal_count"], 3);
}

#[test]
fn oracle_shooting_p3() {
    let out = hardy(&["oracle", "--p", "3", "--q", "3", "--n", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let lambda = json(&out)["result"]["lambda"].as_f64().unwrap();
    assert!((lambda - 3.5361).abs() < 1e-3, "{lambda}");
}

#[test]
fn oracle_without_coverage_is_rejected() {
    let out = hardy(&["oracle", "--p", "3", "--q", "2", "--u", "1+x"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn widths_p2_first_mode() {
    let out = hardy(&["widths", "--p", "2", "--q", "2", "--u", "1", "--v", "1", "--n", "1", "--grid-level", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["result"];
    for key in ["kolmogorov_lb", "bernstein_val", "approx_ub"] {
        let v = r[key].as_f64().unwrap();
        assert!((v - 0.21221).abs() <= 0.05 * 0.21221, "{key} = {v}");
    }
}

#[test]
fn spec_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("problem.json");
    std::fs::write(&path, r#"{"p": 2, "q": 2, "interval": "0,2", "u": "1", "v": "1", "grid_level": 10}"#).unwrap();
    let spec = path.to_str().unwrap();

    let out = hardy(&["solve", "--spec", spec]);
    assert_eq!(out.status.code(), Some(0));
    let lambda = json(&out)["result"]["lambda"].as_f64().unwrap();
    let want = (std::f64::consts::PI / 4.0).powi(2);
    assert!((lambda - want).abs() < 1e-5 * want, "{lambda}");

    let out = hardy(&["solve", "--spec", spec, "--interval", "0,1"]);
    let lambda = json(&out)["result"]["lambda"].as_f64().unwrap();
    assert!((lambda - 2.46740).abs() < 1e-4, "{lambda}");

    std::fs::write(&path, r#"{"p": 2, "q": 2, "colour": "red"}"#).unwrap();
    assert_eq!(hardy(&["solve", "--spec", spec]).status.code(), Some(1));
}

#[test]
fn csv_output_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    let report = dir.path().join("report.csv");
    let out = hardy(&[
        "solve", "--p", "2", "--q", "2", "--grid-level", "6", "--format", "csv", "--out",
        report.to_str().unwrap(), "--dump-f", f.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# manifest: "));
    assert_eq!(lines[1], "n,lambda,lambda_pow,g_norm,nodal_count,residual");
    let dump = std::fs::read_to_string(&f).unwrap();
    assert_eq!(dump.lines().count(), 1 + 65);
    assert_eq!(dump.lines().next(), Some("x,value"));
}

#[test]
fn asymptote_reports_trend() {
    let out = hardy(&["asymptote", "--p", "3", "--q", "2", "--nmax", "6", "--grid-level", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["result"];
    assert_eq!(r["rows"].as_array().unwrap().len(), 7);
    assert_eq!(r["monotone_trend"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("predicted"));
}

#[test]
fn selftest_passes() {
    let out = hardy(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(!text.contains("FAIL"));
}
