mod common;

use std::fs;
use std::path::Path;

use common::R1_JSON;
use tempfile::TempDir;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["fwadopt"];
    full.extend_from_slice(args);
    let code = fwadopt::cli::run(full, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn workspace(json: &str) -> (TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("params.json");
    fs::write(&path, json).unwrap();
    let p = path.to_str().unwrap().to_string();
    (dir, p)
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

fn path_str(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn eval_prints_nine_significant_digits() {
    let (_d, cfg) = workspace(R1_JSON);
    let r = run(&["eval", "--config", &cfg, "--x", "0"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(value(&r.out, "G_N"), "-1.66666667");
    assert_eq!(value(&r.out, "gap_slope"), "-0.326402016");
    assert_eq!(value(&r.out, "intrusion_probability"), "0.333333333");
    assert_eq!(run(&["eval", "--config", &cfg, "--x", "1.5"]).code, 2);
}

#[test]
fn equilibrium_report_and_csv() {
    let (d, cfg) = workspace(R1_JSON);
    let csv = path_str(d.path(), "eq.csv");
    let r = run(&["equilibrium", "--config", &cfg, "--csv", &csv]);
    assert_eq!(r.code, 0, "{}", r.err);
    let zeta: f64 = value(&r.out, "zeta").parse().unwrap();
    assert!((zeta - 0.3157).abs() < 1e-3);
    assert_eq!(value(&r.out, "classification"), "interior");
    assert_eq!(value(&r.out, "predicted_sign_dr"), "+");
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("quantity,value\nzeta,"));

    let (_d, cfg) = workspace(&R1_JSON.replace("\"c\": 0.4", "\"c\": 1.2"));
    let r = run(&["equilibrium", "--config", &cfg]);
    assert_eq!(value(&r.out, "classification"), "zero-adoption");
    assert_eq!(value(&r.out, "roots"), "");
}

#[test]
fn config_errors_exit_with_usage_code() {
    let (_d, cfg) = workspace(&R1_JSON.replace("\"alpha\": 0", "\"alpha\": 0, \"pi1\": 0.12"));
    let r = run(&["equilibrium", "--config", &cfg]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("pi1/alpha mutually exclusive"), "{}", r.err);

    let (_d, cfg) = workspace(&R1_JSON.replace("\"Pi1\": 0.4", "\"Pi1\": 0.2"));
    let r = run(&["equilibrium", "--config", &cfg]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("ordering"), "{}", r.err);

    let r = run(&["equilibrium", "--config", "/no/such/file.json"]);
    assert_eq!(r.code, 4);
    assert_eq!(run(&["frobnicate"]).code, 2);
}

#[test]
fn simulate_writes_exact_header_and_event_row() {
    let (d, cfg) = workspace(R1_JSON);
    let out = path_str(d.path(), "ode.csv");
    let r = run(&["simulate", "--config", &cfg, "--horizon", "2", "--out", &out]);
    assert_eq!(r.code, 0, "{}", r.err);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,y,x,region"));
    let event = text.lines().find(|l| l.ends_with(",boundary")).unwrap();
    let t: f64 = event.split(',').next().unwrap().parse().unwrap();
    assert!((t - 0.37945).abs() < 1e-3);
    assert!(text.contains("\n0.2,"));

    assert_eq!(run(&["simulate", "--config", &cfg, "--horizon", "0"]).code, 2);
    assert_eq!(run(&["simulate", "--config", &cfg, "--horizon", "1", "--mode", "agents", "--n", "10"]).code, 2);
    let bad = path_str(d.path(), "missing/dir/out.csv");
    assert_eq!(run(&["simulate", "--config", &cfg, "--horizon", "1", "--out", &bad]).code, 4);
}

#[test]
fn agent_runs_are_reproducible() {
    let (d, cfg) = workspace(R1_JSON);
    let files: Vec<String> = (0..2).map(|i| path_str(d.path(), &format!("a{i}.csv"))).collect();
    for f in &files {
        let r = run(&[
            "simulate", "--config", &cfg, "--mode", "agents", "--n", "500", "--horizon", "5", "--seed", "42",
            "--out", f,
        ]);
        assert_eq!(r.code, 0, "{}", r.err);
    }
    assert_eq!(fs::read(&files[0]).unwrap(), fs::read(&files[1]).unwrap());
}

#[test]
fn phase_lattice() {
    let (_d, cfg) = workspace(R1_JSON);
    let r = run(&["phase", "--config", &cfg, "--grid", "50"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let mut lines = r.out.lines();
    assert_eq!(lines.next(), Some("x,y,dx,dy,region"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.iter().filter(|l| !l.ends_with(",equilibrium")).count(), 1275);
    assert!(rows
        .iter()
        .any(|l| l.starts_with("0.545890") && l.contains(",0,") && l.ends_with(",equilibrium")));

    let r = run(&["phase", "--config", &cfg, "--grid", "11"]);
    assert!(r.out.lines().any(|l| l == "0.1,0.5,0.9,-0.5,1"), "{}", r.out);
    assert_eq!(run(&["phase", "--config", &cfg, "--grid", "1"]).code, 2);
}

#[test]
fn policy_report() {
    let (d, cfg) = workspace(R1_JSON);
    let csv = path_str(d.path(), "curves.csv");
    let r = run(&["policy", "--config", &cfg, "--csv", &csv]);
    assert_eq!(r.code, 0, "{}", r.err);
    let poa: f64 = value(&r.out, "poa").parse().unwrap();
    assert!((poa - 0.8204).abs() < 0.005);
    let so: f64 = value(&r.out, "soposh").parse().unwrap();
    assert!((so - 1.111).abs() < 0.01);
    assert_eq!(value(&r.out, "optimum_Pi1[centralized]"), "0.3");
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("view,Pi1,pi1,x_star,objective,interior\n"));

    let (_d, cfg) = workspace(&R1_JSON.replace("\"Pi1\": 0.4", "\"Pi1\": 1"));
    let r = run(&["policy", "--config", &cfg]);
    assert_eq!(value(&r.out, "poa"), "1");
}

#[test]
fn sweep_rows() {
    let (d, cfg) = workspace(R1_JSON);
    let out = path_str(d.path(), "sweep.csv");
    let r = run(&[
        "sweep", "--config", &cfg, "--axis", "Pi1", "--lo", "0.3", "--hi", "1", "--steps", "15", "--jobs", "3",
        "--out", &out,
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("value,zeta,zeta_prime,x_star,U_star,V_star,x_hat,poa,soposh,seposh")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 15);
    let interior: Vec<f64> = rows
        .iter()
        .filter(|r| !r[1].is_empty())
        .map(|r| r[3].parse().unwrap())
        .collect();
    assert!(interior.windows(2).all(|w| w[1] > w[0]));
    let values: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]));

    // job count does not change the bytes
    let again = path_str(d.path(), "sweep1.csv");
    run(&[
        "sweep", "--config", &cfg, "--axis", "Pi1", "--lo", "0.3", "--hi", "1", "--steps", "15", "--jobs", "1",
        "--out", &again,
    ]);
    assert_eq!(text, fs::read_to_string(&again).unwrap());

    let r = run(&["sweep", "--config", &cfg, "--axis", "r", "--lo", "0.1", "--hi", "2", "--steps", "12"]);
    let xs: Vec<f64> = r.out.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[1] >= w[0]));

    let r = run(&["sweep", "--config", &cfg, "--axis", "c", "--lo", "0.3", "--hi", "0.5", "--steps", "1"]);
    assert_eq!(r.out.lines().count(), 2);
    assert!(r.out.lines().nth(1).unwrap().starts_with("0.3,"));

    assert_eq!(run(&["sweep", "--config", &cfg, "--axis", "zeta", "--lo", "0", "--hi", "1"]).code, 2);
}
