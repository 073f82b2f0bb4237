use std::process::Command;

use bssc::bounds::{self, SumRateReport};
use bssc::conjecture::ViolationReport;
use bssc::reduction::{ReductionStep, TripleDist};

fn bssc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bssc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn capacity_command() {
    let o = bssc(&["capacity"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["capacity"].as_f64().unwrap() - 0.321928).abs() < 1e-6);
    assert_eq!(v["input"]["shape"][0], 2);
}

#[test]
fn verify_reports_parse() {
    let o = bssc(&["verify", "--function", "all", "--step", "0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let reports: Vec<ViolationReport> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(reports.len(), 16);
    assert!(reports.iter().all(|r| !r.violated));

    let o = bssc(&["verify", "--function", "0110", "--step", "0.05"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["function"], "0110");
    assert_eq!(v["class"], "xor");
    assert_eq!(v["points"], 1771);
    assert!(v["argmax"].as_array().unwrap().len() == 4);
}

#[test]
fn sumrate_km_matches_library() {
    let o = bssc(&["sumrate", "--bound", "km"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("0.3743955"));
    let parsed: SumRateReport = serde_json::from_str(&text).unwrap();
    let direct = bounds::km_sum_rate().unwrap();
    assert_eq!(parsed, direct);
    assert_eq!(text, serde_json::to_string_pretty(&direct).unwrap() + "\n");
}

#[test]
fn envelope_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("env.csv");
    let o = bssc(&[
        "envelope",
        "--samples",
        "4096",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("x,delta,g\n"));
    assert_eq!(text.lines().count(), 4097);
    let env = bounds::lower_convex_envelope(4096, bounds::EnvelopeMode::Analytic).unwrap();
    assert_eq!(text, bounds::envelope_csv(&env, 4096));
}

#[test]
fn points_csv() {
    let o = bssc(&["points", "--bound", "outer", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("R1,R2,bound_id"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f[2], "outer");
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 5);
    assert!(rows
        .iter()
        .any(|&(a, b)| a.abs() < 1e-12 && (b - 0.321928).abs() < 1e-6));
}

#[test]
fn reduce_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    // |U| = 3, |V| = 2, X = u AND v with u in {0, 1, 1}
    let p = r#"{"shape":[3,2,2],"p":[0.2,0,0.1,0, 0.15,0,0,0.1, 0.25,0,0,0.2]}"#;
    std::fs::write(&path, p).unwrap();
    let o = bssc(&["reduce", "--input", path.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let steps: Vec<ReductionStep> = serde_json::from_value(v["certificates"].clone()).unwrap();
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0].axis, "u");
    let reduced: TripleDist = serde_json::from_value(v["reduced"].clone()).unwrap();
    assert_eq!(reduced.shape(), &[2, 2, 2]);
}

#[test]
fn hajek_seeded() {
    let a = bssc(&["hajek", "--seed", "4"]);
    let b = bssc(&["hajek", "--seed", "4"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert!(v["max_recomposition_error"].as_f64().unwrap() <= 1e-12);
    assert!(v["w"]["p"].as_array().unwrap().len() <= 8);
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(
        bssc(&["reduce", "--input", bad.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        bssc(&["reduce", "--input", "/nonexistent/p.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(bssc(&["points", "--bound", "nope"]).status.code(), Some(1));
    assert_eq!(bssc(&["frobnicate"]).status.code(), Some(1));
    let o = bssc(&["capacity", "--out", "/nonexistent/dir/out.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}
