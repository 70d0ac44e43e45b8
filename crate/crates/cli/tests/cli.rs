use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn biflat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biflat"))
        .args(args)
        .env_remove("BIFLAT_TOL_FD")
        .env_remove("BIFLAT_TOL_ALGEBRAIC")
        .env_remove("BIFLAT_TOL_DRIFT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("stdout is not a report ({e}); stderr:\n{}", String::from_utf8_lossy(&o.stderr))
    })
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check named {name}"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn verify_epsilon_model_passes() {
    let o = biflat(&["verify", "--model", "epsilon", "--n", "3", "--eps", "0.5", "--points", "100", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["pass"], true);
    assert_eq!(r["tool"], "biflat");
    assert_eq!(r["command"], "verify");
    assert!(!r["version"].as_str().unwrap().is_empty());
    assert!(!r["provenance"].as_str().unwrap().is_empty());
    assert_eq!(r["tolerances"]["fd"], 1e-6);
    assert_eq!(r["parameters"]["seed"], 7);
    for c in r["checks"].as_array().unwrap() {
        assert!(c["value"].as_f64().unwrap() <= c["tolerance"].as_f64().unwrap(), "{c}");
    }
    assert_eq!(check(&r, "almost equivalence")["value"], 0.0);
}

#[test]
fn lame_eigen_reports_plus_minus_two() {
    let o = biflat(&["lame", "eigen", "--n", "2", "--C1", "1", "--C2", "-4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    let r = report(&o);
    let mut re: Vec<f64> = Vec::new();
    collect_eigenvalues(&r["data"], &mut re);
    assert!(!re.is_empty(), "no eigenvalues in {text}");
    assert!(re.iter().all(|x| (x.abs() - 2.0).abs() < 1e-10), "{re:?}");
    assert!(re.iter().any(|x| *x > 0.0) && re.iter().any(|x| *x < 0.0));
}

/// Real parts of every `[re, im]` pair listed under an "eigenvalues" key.
fn collect_eigenvalues(v: &Value, out: &mut Vec<f64>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                if k.contains("eigenvalues") {
                    for pair in x.as_array().into_iter().flatten() {
                        out.push(pair[0].as_f64().unwrap());
                        assert!(pair[1].as_f64().unwrap().abs() < 1e-12);
                    }
                } else {
                    collect_eigenvalues(x, out);
                }
            }
        }
        Value::Array(a) => a.iter().for_each(|x| collect_eigenvalues(x, out)),
        _ => {}
    }
}

#[test]
fn ode3_integrate_symmetric_data_keeps_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let o = biflat(&[
        "ode3", "integrate", "--z0", "0.5", "--z1", "0.6", "--F0", "1,1,1,1,1,1", "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "z,F12,F13,F21,F23,F31,F32,mR2,D,sigma_res");
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v.len(), 10);
        assert!((v[7] - 3.0).abs() < 1e-9, "mR2 = {}", v[7]);
        assert!(v[8].abs() < 1e-9, "D = {}", v[8]);
        rows += 1;
    }
    assert!(rows > 2);
    let r = report(&o);
    assert_eq!(r["artifacts"][0], csv.to_str().unwrap());
}

#[test]
fn csv_on_stdout_moves_the_report_to_stderr() {
    let o = biflat(&["ode3", "integrate", "--F0", "1,1,1,1,1,1", "--csv", "-"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.starts_with("z,F12,"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"command\": \"ode3 integrate\""));
}

#[test]
fn same_seed_gives_identical_csv() {
    let run = || {
        let o = biflat(&["hierarchy", "commute", "--n", "3", "--cells", "64", "--csv", "-"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn manifest_runs_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(
        dir.path(),
        "m.json",
        r#"{"command": "models epsilon", "seed": 3, "n": 4, "eps": -0.25, "points": 5}"#,
    );
    let o = biflat(&["--manifest", &m]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["parameters"]["n"], 4);
    assert_eq!(r["parameters"]["eps"], -0.25);

    let o = biflat(&["models", "epsilon", "--manifest", &m, "--n", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["parameters"]["n"], 3);
    assert_eq!(r["parameters"]["eps"], -0.25);
    assert_eq!(r["parameters"]["seed"], 3);

    let o = biflat(&["verify", "--manifest", &m]);
    assert_eq!(code(&o), 2, "command mismatch must be rejected");
}

#[test]
fn bad_manifests_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("unknown.json", r#"{"command": "verify", "seed": 1, "colour": "red"}"#),
        ("noseed.json", r#"{"command": "verify"}"#),
        ("nocmd.json", r#"{"seed": 1}"#),
        ("badcmd.json", r#"{"command": "frobnicate", "seed": 1}"#),
        ("foreign.json", r#"{"command": "ode3 invariants", "seed": 1, "F0": [1,1,1,1,1,1], "eps": 0.5}"#),
        ("syntax.json", "{"),
    ] {
        let o = biflat(&["--manifest", &write(dir.path(), name, text)]);
        assert_eq!(code(&o), 2, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn invalid_input_exits_2() {
    for args in [
        vec!["verify", "--model", "epsilon", "--n", "1"],
        vec!["ode3", "integrate", "--F0", "1,2,3"],
        vec!["ode3", "integrate", "--F0", "1,1,1,1,1,1", "--z0", "0.5", "--z1", "0.5"],
        vec!["models", "n2", "--C1", "1", "--C2", "4"],
        vec!["painleve", "params", "--R2", "1"],
        vec!["hierarchy", "commute", "--cells", "4"],
        vec!["verify", "--points", "0"],
        vec!["verify", "--no-such-flag"],
        vec![],
    ] {
        let o = biflat(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn negative_controls_exit_1_with_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let o = biflat(&["hierarchy", "symmetry", "--control", "--points", "5", "--report", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["pass"], false);
    assert_eq!(check(&r, "symmetry residual: velocities")["pass"], true);
    assert_eq!(check(&r, "symmetry residual: control (u^i)^2 + 1")["pass"], false);

    let o = biflat(&["hierarchy", "commute", "--control", "--cells", "64"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn tolerance_overrides_apply_in_order() {
    let args = ["painleve", "params", "--R2", "2", "--D", "0.3"];
    let o = Command::new(env!("CARGO_BIN_EXE_biflat"))
        .args(args)
        .env("BIFLAT_TOL_ALGEBRAIC", "1e-3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(report(&o)["tolerances"]["algebraic"], 1e-3);

    let o = Command::new(env!("CARGO_BIN_EXE_biflat"))
        .args(args)
        .args(["--tol-algebraic", "1e-4"])
        .env("BIFLAT_TOL_ALGEBRAIC", "1e-3")
        .output()
        .unwrap();
    assert_eq!(report(&o)["tolerances"]["algebraic"], 1e-4);

    // Finite-difference residuals are never this small.
    let o = biflat(&["verify", "--points", "3", "--tol-fd", "1e-300"]);
    assert_eq!(code(&o), 1);
    let o = biflat(&["verify", "--points", "3", "--tol-fd", "0"]);
    assert_eq!(code(&o), 2, "tolerances must be positive");

    let o = Command::new(env!("CARGO_BIN_EXE_biflat"))
        .args(args)
        .env("BIFLAT_TOL_ALGEBRAIC", "tight")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn parameter_cubic_with_zero_d() {
    let o = biflat(&["painleve", "params", "--R2", "2", "--D", "0"]);
    assert_eq!(code(&o), 0);
    let mut roots: Vec<f64> = report(&o)["data"]["roots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| {
            assert_eq!(x[1], 0.0);
            x[0].as_f64().unwrap()
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    assert!(roots[0].abs() < 1e-12 && (roots[1] - 2.0).abs() < 1e-12 && (roots[2] - 2.0).abs() < 1e-12, "{roots:?}");
}

#[test]
fn reconstruct_round_trip_passes() {
    let o = biflat(&["painleve", "reconstruct", "--F0", "0.3,-0.7,0.5,1.1,-0.4,0.8"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert!(check(&r, "F -> f -> F round trip")["value"].as_f64().unwrap() < 1e-6);
}

#[test]
fn n2_families_pass() {
    for args in [
        vec!["models", "n2"],
        vec!["models", "n2", "--lame", "natural"],
        vec!["models", "n2", "--lame", "dual"],
        vec!["models", "n2", "--lame", "dual", "--C1", "2", "--C2", "-1", "--d", "0.5"],
        vec!["verify", "--model", "n2", "--C1", "3", "--C2", "-0.75", "--d", "-1.5"],
    ] {
        let o = biflat(&args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn recursion_schemes_are_path_independent() {
    for scheme in ["principal", "equivalent", "dual"] {
        let o = biflat(&["hierarchy", "recurse", "--scheme", scheme, "--seed", "2", "--paths", "3"]);
        assert_eq!(code(&o), 0, "{scheme}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
