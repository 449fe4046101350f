use std::path::Path;
use std::process::{Command, Output};

use spectra_core::audit::{closed_record_count, load_report};

fn spectra(out: &Path, args: &[&str]) -> Output {
    spectra_env(out, args, None)
}

fn spectra_env(out: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spectra"));
    cmd.args(args).arg("--out").arg(out).env_remove("SPECTRA_THREADS");
    if let Some(t) = threads {
        cmd.env("SPECTRA_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn unknown_flag_is_an_error_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = spectra(dir.path(), &["audit", "--bogus"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&spectra(dir.path(), &["--help"])), 0);
}

#[test]
fn pipeline_errors_are_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = spectra(dir.path(), &["spectrum", "--mesh", "no-such-mesh"]);
    assert_eq!(code(&o), 1);
    assert_eq!(String::from_utf8_lossy(&o.stderr).trim().lines().count(), 1);
    let o = spectra(dir.path(), &["mesh", "gen", "--shape", "icosphere", "--params", "radius=-1"]);
    assert_eq!(code(&o), 1);
    let o = spectra_env(dir.path(), &["lemma-check", "--trials", "1"], Some("0"));
    assert_eq!(code(&o), 1);
}

#[test]
fn mesh_generation_and_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let o = spectra(dir.path(), &["mesh", "gen", "--shape", "icosphere", "--params", "refinement=2", "--name", "s.off"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mesh = dir.path().join("s.off");
    let o = spectra(dir.path(), &["spectrum", "--mesh", mesh.to_str().unwrap(), "--p", "1", "-k", "6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_slice(&read(dir.path().join("spectrum.json"))).unwrap();
    assert_eq!(json["p"], 1);
    assert_eq!(json["zero_count"], 0);
    assert_eq!(json["eigenvalues"].as_array().unwrap().len(), 6);
}

#[test]
fn closed_audit_report_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["audit", "--mesh", "icosphere2", "--suite", "closed", "--j-max", "5"];
    assert_eq!(code(&spectra(a.path(), &args)), 0);
    assert_eq!(code(&spectra_env(b.path(), &args, Some("3"))), 0);
    for name in ["audit.json", "audit.csv", "spectrum_p0.json", "spectrum_p1.json", "spectrum_p2.json"] {
        assert_eq!(read(a.path().join(name)), read(b.path().join(name)), "{name} differs");
    }
    let report = load_report(a.path().join("audit.json")).unwrap();
    assert_eq!(report.mesh, "icosphere2");
    assert_eq!(report.records.len(), closed_record_count(&[0, 1, 2], 5));
}

#[test]
fn failing_audit_exits_with_two() {
    // the icosahedron is too coarse for the curvature-weighted bounds
    let dir = tempfile::tempdir().unwrap();
    let o = spectra(dir.path(), &["audit", "--mesh", "icosphere0", "--suite", "closed", "--j-max", "3"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
    let report = load_report(dir.path().join("audit.json")).unwrap();
    assert!(report.records.iter().any(|r| !r.pass));
}

#[test]
fn dirichlet_audit_with_potential() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.csv");
    std::fs::write(&q, "vertex,value\n100,3.0\n150,1.5\n").unwrap();
    let o = spectra(
        dir.path(),
        &["audit", "--mesh", "square16", "--suite", "dirichlet", "--j-max", "5", "--q", q.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = load_report(dir.path().join("audit.json")).unwrap();
    assert!(report.records.iter().any(|r| r.ineq == "LP-DIR-INT"));
    assert!(report.records.iter().all(|r| r.ineq != "LP-CLASSIC"));
    let o = spectra(dir.path(), &["audit", "--mesh", "cap3", "--suite", "dirichlet", "--ambient", "sphere", "--j-max", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = load_report(dir.path().join("audit.json")).unwrap();
    assert!(report.records.iter().any(|r| r.ineq == "LP-RSS-SUP"));
}

#[test]
fn heisenberg_and_lemma_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = spectra(dir.path(), &["heisenberg", "--n", "1", "--box", "1", "1", "--grid", "16", "-k", "12", "--j-max", "10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(load_report(dir.path().join("kohn.json")).unwrap().records.len(), 10);

    let args = ["lemma-check", "--dim-max", "20", "--trials", "200", "--seed", "7"];
    assert_eq!(code(&spectra(dir.path(), &args)), 0);
    let first = read(dir.path().join("lemma.json"));
    let json: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert!(json["max_residual"].as_f64().unwrap() >= 0.0);
    assert_eq!(json["pass"], true);
    assert_eq!(code(&spectra(dir.path(), &args)), 0);
    assert_eq!(first, read(dir.path().join("lemma.json")));
}
