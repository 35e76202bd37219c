use std::process::Command;

use serde_json::Value;

use rotascope::cli::run_with;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("rotascope").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn rho_of_rational_rotation_is_locked() {
    let v = json(&["rho", "--family", "identity", "--t", "0.5", "--method", "farey"]);
    assert_eq!(v["value"], 0.5);
    assert_eq!(v["radius"], 0.0);
    assert_eq!(v["locked"], "1/2");
}

#[test]
fn arnold_zero_plateau_edge() {
    let v = json(&["plateau", "--family", "arnold", "--K", "0.9", "--p", "0", "--q", "1", "--tol", "1e-10"]);
    let t_right = v["t_right"].as_f64().unwrap();
    assert!((t_right - 0.9 / std::f64::consts::TAU).abs() < 1e-9);
    assert!((t_right - 0.1432394).abs() < 1e-7);
}

#[test]
fn csv_output_has_header() {
    let (code, out, _) = run(&["cf", "--alpha", "golden", "--terms", "5", "--format", "csv"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("k,a,p,q"));
    assert_eq!(lines.last(), Some("4,1,3,5"));
}

#[test]
fn exact_ratio_expansion() {
    let v = json(&["cf", "--alpha", "3/7"]);
    assert_eq!(v["a"], serde_json::json!([0, 2, 3]));
    assert_eq!(v["exact"], true);
}

#[test]
fn usage_errors_exit_two_and_name_the_flag() {
    let (code, _, err) = run(&["rho", "--t", "0.3", "--bogus"]);
    assert_eq!(code, 2);
    assert!(err.contains("--bogus"));
    let (code, _, _) = run(&["rho", "--family", "arnold", "--K", "1.5", "--t", "0.3"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 2);
    let (code, _, err) = run(&["cf", "--alpha", "0.5", "--plot", "x"]);
    assert_eq!(code, 2);
    assert!(err.contains("--plot"));
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        "cf", "rho", "plateau", "inverse", "jd", "sweep", "denjoy", "conjugacy", "probe", "verify",
    ] {
        let (code, out, _) = run(&[sub, "--help"]);
        assert_eq!(code, 0, "{sub}");
        assert!(out.contains("--format") && out.contains("--precision"), "{sub}: {out}");
    }
}

#[test]
fn sweep_plot_files() {
    let dir = std::env::temp_dir().join(format!("rotascope-plot-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let name = dir.join("stairs");
    let name = name.to_str().unwrap();
    let (code, out, err) = run(&[
        "sweep", "--family", "identity", "--samples", "11", "--format", "csv", "--plot", name,
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("t,rho,radius,locked_p,locked_q"));
    let dat = std::fs::read_to_string(format!("{name}.dat")).unwrap();
    assert_eq!(dat.lines().count(), 11);
    let gp = std::fs::read_to_string(format!("{name}.gp")).unwrap();
    assert!(gp.contains("plot \"stairs.dat\""));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn precision_selects_double_double() {
    let a = json(&["rho", "--K", "0.5", "--t", "0.3"]);
    let b = json(&["--precision", "24", "rho", "--K", "0.5", "--t", "0.3"]);
    let (va, vb) = (a["value"].as_f64().unwrap(), b["value"].as_f64().unwrap());
    let (ra, rb) = (a["radius"].as_f64().unwrap(), b["radius"].as_f64().unwrap());
    assert!((va - vb).abs() <= ra + rb);
    assert!(rb < ra);
    let (code, _, _) = run(&["--precision", "40", "rho", "--t", "0.3"]);
    assert_eq!(code, 2);
}

#[test]
fn probe_boundary_csv_schema() {
    let (code, out, _) = run(&[
        "probe", "boundary", "--family", "identity", "--p", "1", "--q", "2", "--deltas", "1e-2,1e-4", "--format", "csv",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next(), Some("delta,quotient"));
}

#[test]
fn probe_convergents_csv_schema() {
    let (code, out, err) = run(&[
        "probe", "convergents", "--family", "identity", "--t0", "0.6180339887498949", "--n-conv", "4", "--format", "csv",
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(
        out.lines().next(),
        Some("k,p,q,t_prime,quotient,uncertainty,bound_eM,bound_e55")
    );
    assert_eq!(out.lines().count(), 5);
}

fn strip_seconds(mut v: Value) -> Value {
    for c in v["checks"].as_array_mut().unwrap() {
        c.as_object_mut().unwrap().remove("seconds");
    }
    v
}

#[test]
fn verify_report_is_deterministic() {
    let args = ["verify", "--suite", "return-combinatorics,brunovsky", "--seed", "7"];
    let a = json(&args);
    let b = json(&args);
    assert_eq!(strip_seconds(a.clone()), strip_seconds(b));
    let checks = a["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    for c in checks {
        assert_eq!(c["status"], "pass");
        for key in ["id", "ref", "observed", "bound", "tol", "seconds"] {
            assert!(c.get(key).is_some());
        }
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_rotascope");
    let ok = Command::new(bin).args(["inverse", "--family", "identity", "--alpha", "0.25"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["t"], 0.25);
    let bad = Command::new(bin).args(["verify", "--suite", "nonexistent"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
