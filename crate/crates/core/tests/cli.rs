use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(cmd: &str, job: &Value, dir: &Path) -> Output {
    let cfg = dir.join(format!("{cmd}.json"));
    std::fs::write(&cfg, job.to_string()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_omegascale"))
        .args([cmd, "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap()
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn header(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).lines().next().unwrap_or_default().to_string()
}

fn bm() -> Value {
    json!({"type": "bm", "mu": 1.0, "sigma": std::f64::consts::SQRT_2})
}

fn band() -> Value {
    json!({"type": "band", "p": 0.3, "q": 1.0, "a": 0.5, "b": 1.2})
}

#[test]
fn scale_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let job = json!({"model": bm(), "omega": {"type": "constant", "q": 0.5}, "grid": {"x_max": 1.0, "h": 0.01}});
    let out = run("scale", &job, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(&out), "x,w_q,z_q,w_omega,z_omega");
    let rs = rows(&out);
    assert_eq!(rs.len(), 101);
    for r in &rs {
        let wq: f64 = r[1].parse().unwrap();
        let wo: f64 = r[3].parse().unwrap();
        assert!((wq - wo).abs() <= 1e-6);
    }
    let job = json!({"model": bm(), "omega": band(), "grid": {"x_max": 1.0, "h": 0.01}, "query": {"h_omega": true}});
    assert_eq!(header(&run("scale", &job, dir.path())), "x,w_q,z_q,w_omega,z_omega,h_omega");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{ \"model\": ").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_omegascale"))
        .args(["scale", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let job = json!({"model": bm(), "omega": {"type": "constant", "q": 0.5}, "grid": {"x_max": 1.0, "h": 0.01}, "extra": 1});
    assert_eq!(run("scale", &job, dir.path()).status.code(), Some(2));
    let job = json!({"model": bm(), "omega": {"type": "constant", "q": -1.0}, "grid": {"x_max": 1.0, "h": 0.01}});
    assert_eq!(run("scale", &job, dir.path()).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    let out = Command::new(env!("CARGO_BIN_EXE_omegascale"))
        .args(["scale", "--config", missing.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_values_and_numeric_errors() {
    let dir = tempfile::tempdir().unwrap();
    let job = json!({
        "model": bm(), "omega": band(), "grid": {"x_max": 2.0, "h": 0.002},
        "query": {"points": [{"x": 1.5, "c": 1.5, "kind": "two_sided_up"}, {"x": 0.7, "c": 1.5, "kind": "reflected_dual"}]},
        "output": {"format": "json"}
    });
    let out = run("exit", &job, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["records"][0]["value"].as_f64(), Some(1.0));
    assert!(v["records"][0]["stderr"].is_null());
    let d = v["records"][1]["value"].as_f64().unwrap();
    assert!(d > 0.0 && d < 1.0);

    let job = json!({"model": bm(), "omega": band(), "grid": {"x_max": 2.0, "h": 0.002},
        "query": {"points": [{"x": 1.8, "c": 1.5, "kind": "two_sided_up"}]}});
    assert_eq!(run("exit", &job, dir.path()).status.code(), Some(3));
}

#[test]
fn occupation_closed_form_matches_solver() {
    let dir = tempfile::tempdir().unwrap();
    let job = json!({"model": bm(), "omega": band(), "grid": {"x_max": 2.0, "h": 0.001}, "query": {"c": 1.5, "n": 15}});
    let out = run("occupation", &job, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(&out), "x,up_closed,down_closed,up_solver,down_solver");
    for r in rows(&out) {
        let v: Vec<f64> = r.iter().map(|s| s.parse().unwrap()).collect();
        assert!((v[1] - v[3]).abs() < 1e-6 && (v[2] - v[4]).abs() < 1e-6, "{v:?}");
    }
}

#[test]
fn resolvent_panel_csv() {
    let dir = tempfile::tempdir().unwrap();
    let job = json!({"model": bm(), "omega": band(), "grid": {"x_max": 2.0, "h": 0.005},
        "query": {"kind": "u", "x": 0.7, "c": 1.5, "panel": {"lo": 0.0, "hi": 1.5, "n": 30}}});
    let out = run("resolvent", &job, dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(header(&out), "y,density");
    assert_eq!(rows(&out).len(), 31);
    let job = json!({"model": bm(), "omega": band(), "grid": {"x_max": 2.0, "h": 0.005},
        "query": {"kind": "u", "x": 0.7, "c": 1.5, "panel": {"lo": 0.0, "hi": 1.5, "n": 5000}}});
    assert_eq!(run("resolvent", &job, dir.path()).status.code(), Some(3));
}

#[test]
fn omega_ruin_table() {
    let dir = tempfile::tempdir().unwrap();
    let job = json!({"model": {"type": "bm", "mu": 1.0, "sigma": 1.0},
        "query": {"gamma0": 0.2, "gamma1": 0.5, "d": 1.0, "x": [0.0, 0.5, 1.0]}});
    let out = run("omega-ruin", &job, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: Vec<f64> = rows(&out).iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(v[0] > v[1] && v[1] > v[2] && v[2] > 0.0);
}

#[test]
fn mc_check_is_reproducible_and_concordant() {
    let dir = tempfile::tempdir().unwrap();
    let job = json!({"model": bm(), "omega": band(), "grid": {"x_max": 2.0, "h": 0.001},
        "query": {"target": "two_sided_up", "x": 0.7, "c": 1.5, "mc": {"n_paths": 20000, "seed": 4}},
        "output": {"format": "json"}});
    let a = run("mc-check", &job, dir.path());
    let b = run("mc-check", &job, dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["z"].as_f64().unwrap().abs() <= 3.0, "{v}");

    let job = json!({"model": bm(), "omega": band(), "grid": {"x_max": 2.0, "h": 0.001},
        "query": {"target": "two_sided_up", "x": 0.7, "c": 1.5, "mc": {"n_paths": 200, "horizon_cap": 0.01}}});
    assert_eq!(run("mc-check", &job, dir.path()).status.code(), Some(4));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let job = json!({"model": bm(), "omega": {"type": "constant", "q": 0.5}, "grid": {"x_max": 0.5, "h": 0.1}});
    let cfg = dir.path().join("job.json");
    std::fs::write(&cfg, job.to_string()).unwrap();
    let dest = dir.path().join("out.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_omegascale"))
        .args(["scale", "--config", cfg.to_str().unwrap(), "--output", dest.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(dest).unwrap().starts_with("x,w_q,z_q,w_omega,z_omega\n"));
}
