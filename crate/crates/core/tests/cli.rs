use std::path::Path;
use std::process::{Command, Output};

fn malab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_malab")).args(args).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn catalog_to_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cat");
    let o = malab(&["catalog", "--alpha-list=-1,0", "--k-max", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = json(&out.join("report.json"))["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2]["status"], "degenerate");
    assert!(out.join("catalog.csv").exists());
}

#[test]
fn catalog_to_stdout() {
    let o = malab(&["catalog", "--alpha-list=-1", "--k-max", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"][0]["status"], "radial");
}

#[test]
fn domain_errors_exit_one() {
    let o = malab(&["negative", "--alpha", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
    let o = malab(&["linearized", "--alpha", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = malab(&["instability", "--t-range", "0.1,0.01"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(malab(&["nonsense"]).status.code(), Some(1));
    assert_eq!(malab(&["catalog", "--k-max", "x"]).status.code(), Some(1));
    assert_eq!(malab(&["--help"]).status.code(), Some(0));
}

#[test]
fn unresolved_instability_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("inst");
    // three section heights on a coarse grid cannot span the required decades
    let o = malab(&[
        "instability", "--grid", "48", "--eps", "0.05", "--t-range", "0.3,0.1,3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("report.json"));
    assert_eq!(report["runs"].as_array().unwrap().len(), 1);
    assert!(out.join("trace_eps_0.05.csv").exists());
}

#[test]
fn solve_then_blowup() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("radial.problem");
    std::fs::write(&problem, "alpha = 2\nrhs = power\nboundary = 0.2357022603955158\ngrid = 128\n").unwrap();
    let solved = dir.path().join("solved");
    let o = malab(&["solve", "--problem", problem.to_str().unwrap(), "--out", solved.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&solved.join("report.json"));
    assert_eq!(report["solver"]["converged"], true);
    let field = solved.join("solution.field");
    assert!(field.exists());

    let out = dir.path().join("blow");
    let o = malab(&[
        "blowup", "--input", field.to_str().unwrap(), "--alpha", "2", "--k-max", "1", "--r-list", "0.8,0.4",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("report.json"));
    let steps = report["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 2);
    for s in steps {
        assert_eq!(s["best_k"], 1);
        assert!(s["distance"].as_f64().unwrap() < 0.05);
    }
}
