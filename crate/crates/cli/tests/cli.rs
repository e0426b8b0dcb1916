use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frame-kahler"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn planewave_central_passes_with_s_tilde() {
    let o = run(&["verify", "--example", "planewave", "--suite", "central"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["passed"], Value::Bool(true));
    assert_eq!(r["schema_version"], 1);
    let s = r["attachments"]["central.s_tilde"].as_f64().unwrap();
    assert!((s + 0.5).abs() < 1e-9);
}

#[test]
fn warped_complete_reports_sectional_value() {
    let o = run(&["verify", "--example", "warped_complete", "--suite", "ke"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    let sec = &r["attachments"]["ke.einstein.sectional"];
    let lambda = -3.0;
    assert!((sec[0]["min"].as_f64().unwrap() - 2.0 * lambda / 3.0).abs() < 1e-8);
    assert_eq!(sec[0]["plane"], serde_json::json!(["k", "T"]));
}

#[test]
fn s3xr_is_flat() {
    let o = run(&["verify", "--example", "s3xr", "--suite", "central"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["attachments"]["flat"], Value::Bool(true));
}

#[test]
fn reports_are_byte_identical() {
    let a = run(&["verify", "--example", "ppwave", "--suite", "all"]);
    let b = run(&["verify", "--example", "ppwave", "--suite", "all"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn thread_cap_does_not_change_report() {
    let a = run(&["verify", "--example", "planewave"]);
    let b = bin()
        .args(["verify", "--example", "planewave"])
        .env("FRAME_KAHLER_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn tightened_tolerance_fails_with_exit_one() {
    let o = run(&["verify", "--example", "planewave", "--tol", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["passed"], Value::Bool(false));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["verify", "--example", "nope"]).status.code(), Some(2));
    assert_eq!(
        run(&["verify", "--example", "s3xr", "--suite", "ke"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["verify"]).status.code(), Some(2));
    assert_eq!(run(&["catalog", "show", "nope"]).status.code(), Some(2));
    assert_eq!(
        run(&["ke", "--family", "alphaneg", "--alpha", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify", "--example", "s3xr", "--grid", "tau=1:0:3"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn catalog_listing() {
    let o = run(&["catalog", "list"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 7);
    let o = run(&["catalog", "show", "planewave"]);
    let v = json(&o);
    for (k, x) in [("alpha", -1.0), ("beta", 0.0), ("a", -1.0), ("b", 0.0)] {
        assert_eq!(v["constants"][k].as_f64(), Some(x));
    }
    let v = json(&run(&["catalog", "show", "warped_alpha0"]));
    assert!(v["formula"].as_str().unwrap().contains("w = (3(a1 p(tau) + a2))^(1/3)"));
}

#[test]
fn ke_families() {
    let o = run(&["ke", "--family", "alpha0", "--lambda", "-1", "--a1", "1", "--a2", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert!(r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["id"] == "ke_ode_residual" && c["residual"].as_f64().unwrap() <= 1e-9));
    assert_eq!(r["attachments"]["completeness"]["complete"], Value::Bool(true));

    let o = run(&["ke", "--family", "alpha-minus2"]);
    assert_eq!(o.status.code(), Some(0));

    let o = run(&["ke", "--family", "alphaneg", "--alpha", "-1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["attachments"]["einstein.flat"], Value::Bool(true));
}

#[test]
fn csv_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&[
        "ke",
        "--family",
        "complete",
        "--lambda",
        "-3",
        "--n",
        "5",
        "--format",
        "both",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tau,w,f,c,ke_ode_residual,s"));
    assert_eq!(lines.count(), 5);
    assert!(std::fs::read_to_string(&out).unwrap().contains("\"passed\": true"));

    let o = run(&["verify", "--example", "planewave", "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("u,s_tilde,central_curvature,c"));
    assert_eq!(
        run(&["verify", "--example", "planewave", "--format", "both"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn config_documents() {
    let dir = tempfile::tempdir().unwrap();
    let doc = serde_json::json!({
        "case": "central",
        "kset": ["tau"],
        "frames": ["k", "T", "x", "y"],
        "g": {"k,T": "1", "T,T": "-1", "x,x": "1", "y,y": "1"},
        "brackets": {
            "k,x": {"y": "-2"}, "k,y": {"x": "2"},
            "x,y": {"k": "-2", "T": "-2"}
        },
        "D": {"k": {"tau": "1"}, "T": {"tau": "-1"}, "x": {}, "y": {}},
        "constants": {"a": 1, "b": -1, "alpha": -2, "beta": 0, "ell": 1},
        "f": "exp(tau)",
        "grid": ["tau=-0.5:0.5:3"]
    });
    let p = dir.path().join("s3.json");
    std::fs::write(&p, doc.to_string()).unwrap();
    let o = run(&["verify", "--config", p.to_str().unwrap(), "--suite", "central"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["grid"], "tau=-0.5:0.5:3");

    let mut bad = doc.clone();
    bad["D"].as_object_mut().unwrap().remove("y");
    std::fs::write(&p, bad.to_string()).unwrap();
    let o = run(&["verify", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no row for frame field `y`"));

    // a twist that breaks the bracket pattern is a verification failure, not a usage error
    let mut wrong = doc;
    wrong["brackets"]["x,y"]["T"] = "-3".into();
    std::fs::write(&p, wrong.to_string()).unwrap();
    assert_eq!(run(&["verify", "--config", p.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn shown_documents_verify_back() {
    let dir = tempfile::tempdir().unwrap();
    for id in ["s3xr", "warped_complete"] {
        let o = run(&["catalog", "show", id, "--document"]);
        assert_eq!(o.status.code(), Some(0));
        let p = dir.path().join(format!("{id}.json"));
        std::fs::write(&p, &o.stdout).unwrap();
        let v = run(&["verify", "--config", p.to_str().unwrap()]);
        assert_eq!(v.status.code(), Some(0), "{id}: {}", String::from_utf8_lossy(&v.stderr));
    }
}
