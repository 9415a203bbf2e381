//! End-to-end runs of the binary. Text outputs are compared with files in
//! `tests/golden` after rounding every number to 6 significant digits;
//! `UPDATE_GOLDEN=1` rewrites them.

use std::path::{Path, PathBuf};
use std::process::Command;

use regex::Regex;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn sigmaflow(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_sigmaflow")).args(args).output().expect("binary runs");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn normalize(text: &str) -> String {
    let number = Regex::new(r"-?\d+(\.\d+)?([eE][+-]?\d+)?").unwrap();
    text.lines()
        .filter(|l| !l.contains("\"wall_time\""))
        .map(|l| {
            number
                .replace_all(l, |c: &regex::Captures| {
                    let v: f64 = c[0].parse().unwrap();
                    if v == 0.0 {
                        "0".to_string()
                    } else {
                        format!("{v:.5e}")
                    }
                })
                .into_owned()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {name}"));
    assert_eq!(normalize(actual), normalize(&expected), "{name} differs from the golden file");
}

fn value_after(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.trim_start().starts_with(key)).unwrap_or_else(|| panic!("no {key} in {text}"));
    line.trim_start()[key.len()..].trim().trim_matches([',', '"', ':']).trim().parse().unwrap()
}

#[test]
fn classify_blowup_pn() {
    let out = sigmaflow(&["classify", "--family", "pn", "--n", "2", "--k", "1", "--alpha", "1.2", "--beta", "2"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!((value_after(&out.stdout, "lambda") - 1.07335).abs() < 1e-5);
    check_golden("classify_pn_blowup.txt", &out.stdout);
}

#[test]
fn classify_smooth_pn() {
    let out = sigmaflow(&["classify", "--family", "pn", "--n", "2", "--k", "1", "--alpha", "2", "--beta", "2"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("case        Smooth"));
    check_golden("classify_pn_smooth.txt", &out.stdout);
}

#[test]
fn classify_xmn_json() {
    let out = sigmaflow(&[
        "classify", "--family", "xmn", "--m", "0", "--n", "1", "--k", "1", "--b", "0.1", "--bprime", "2", "--json",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["case"], "CurrentBlowup");
    assert!((v["lambda"].as_f64().unwrap() - 0.92523).abs() < 1e-5);
    check_golden("classify_xmn.json", &out.stdout);
}

#[test]
fn lambda_of_xmn_system() {
    let out = sigmaflow(&["lambda", "--family", "xmn", "--n", "1", "--k", "1", "--b", "0.1", "--bprime", "2"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!((value_after(&out.stdout, "alpha") - 0.51942).abs() < 1e-5);
    assert!((value_after(&out.stdout, "beta") - 0.22233).abs() < 1e-5);
    check_golden("lambda_xmn.txt", &out.stdout);
}

#[test]
fn lambda_needs_blowup() {
    let out = sigmaflow(&["lambda", "--alpha", "1.5", "--beta", "2"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("Smooth"));
}

#[test]
fn stationary_csv() {
    let out = sigmaflow(&["stationary", "--alpha", "1.2", "--beta", "2", "--points", "17"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.starts_with("x,f,fprime\n"));
    assert_eq!(out.stdout.lines().count(), 18);
    check_golden("stationary_pn.csv", &out.stdout);
}

#[test]
fn evolve_smooth_case() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = sigmaflow(&[
        "evolve", "--alpha", "1.5", "--beta", "2", "--points", "41", "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["case"], "Smooth");
    assert_eq!(v["status"], "Converged");
    assert!(v["sup_error"].as_f64().unwrap() <= 5e-3);
    for f in ["snapshots.csv", "profiles.csv", "summary.json"] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
    let profiles = std::fs::read_to_string(out_dir.join("profiles.csv")).unwrap();
    assert!(profiles.starts_with("x,f0,f_final,f_analytic\n"));
    assert_eq!(profiles.lines().count(), 42);
    let snapshots = std::fs::read_to_string(out_dir.join("snapshots.csv")).unwrap();
    assert!(snapshots.starts_with("t,x,f,fprime,sigma_k\n"));
    check_golden("evolve_smooth.json", &out.stdout);
}

#[test]
fn evolve_blowup_lambda() {
    let out = sigmaflow(&["evolve", "--alpha", "1.2", "--beta", "2", "--points", "201"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    let est = v["lambda_estimate"].as_f64().unwrap();
    assert!((est - 1.0733500838578).abs() <= 1e-3, "{est}");
}

#[test]
fn evolve_from_exact_limit_takes_no_steps() {
    let out = sigmaflow(&["evolve", "--n", "3", "--k", "2", "--alpha", "2", "--beta", "2", "--initial", "analytic"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["steps"], 0);
}

#[test]
fn evolve_indeterminate_exit() {
    let out = sigmaflow(&["evolve", "--alpha", "1.2", "--beta", "2", "--max-steps", "10"]);
    assert_eq!(out.code, 2, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["status"], "Indeterminate");
}

#[test]
fn obstacle_summary() {
    let out = sigmaflow(&["obstacle", "--alpha", "1.2", "--beta", "2", "--points", "101"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert!(v["complementarity"].as_f64().unwrap() < 1e-8);
    assert!((v["lambda"].as_f64().unwrap() - 1.07335).abs() < 1e-2);
    check_golden("obstacle_pn.json", &out.stdout);
}

#[test]
fn obstacle_rejects_xmn_and_reports_stalls() {
    let out = sigmaflow(&["obstacle", "--family", "xmn", "--b", "0.1", "--bprime", "2"]);
    assert_eq!(out.code, 1);
    let out = sigmaflow(&["obstacle", "--alpha", "1.2", "--beta", "2", "--points", "20", "--tol", "1e-300"]);
    assert_eq!(out.code, 3, "{}", out.stderr);
}

#[test]
fn phase_diagram_xmn_slice() {
    let args = [
        "phase-diagram", "--family", "xmn", "--m", "0", "--n", "1", "--k", "1", "--b-range", "0.05,1.5",
        "--bprime-range", "2,2.5", "--resolution", "30x2",
    ];
    let out = sigmaflow(&args);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.starts_with("b,b_prime,invariant,threshold,case,empirical,slope\n"));
    check_golden("phase_xmn.csv", &out.stdout);

    let dir = tempfile::tempdir().unwrap();
    let mut with_out = args.to_vec();
    with_out.extend(["--out", dir.path().to_str().unwrap()]);
    let out = sigmaflow(&with_out);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["bracket"]["bracketing"], 2);
    let boundary = std::fs::read_to_string(dir.path().join("boundary.csv")).unwrap();
    let first: Vec<&str> = boundary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[0], "2");
    assert!((first[1].parse::<f64>().unwrap() - 2.0 / 3.0).abs() < 1e-9);
}

#[test]
fn phase_diagram_pn_brackets() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigmaflow(&[
        "phase-diagram", "--n", "2", "--k", "1", "--alpha-range", "1.05,3", "--beta-range", "1.05,3", "--resolution",
        "50", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["bracket"]["bracketing"], 50);
    assert_eq!(v["disagreements"], 0);
    let out = sigmaflow(&[
        "phase-diagram", "--n", "3", "--k", "3", "--alpha-range", "1.05,3", "--beta-range", "1.05,3", "--resolution",
        "10", "--out", dir.path().to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["smooth"], 100);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# blow-up instance\nfamily = pn\nn = 2\nk = 1\nalpha = 1.2\nbeta = 2\n").unwrap();
    let out = sigmaflow(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("CurrentBlowup"));
    let out = sigmaflow(&["classify", "--config", cfg.to_str().unwrap(), "--alpha", "4"]);
    assert!(out.stdout.contains("Smooth (Concave)"), "{}", out.stdout);
    std::fs::write(&cfg, "alpha = 1.2\nunknown = 1\n").unwrap();
    let out = sigmaflow(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.code, 1);
}

#[test]
fn bad_input_exit_codes() {
    assert_eq!(sigmaflow(&["classify", "--alpha", "0.5", "--beta", "2"]).code, 1);
    assert_eq!(sigmaflow(&["classify", "--alpha", "x", "--beta", "2"]).code, 1);
    assert_eq!(sigmaflow(&["classify", "--beta", "2"]).code, 1);
    assert_eq!(sigmaflow(&["frobnicate"]).code, 1);
    assert_eq!(sigmaflow(&["--help"]).code, 0);
}

#[test]
fn report_writes_figure_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = sigmaflow(&["report", "--points", "81", "--resolution", "10", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    let cases: Vec<&str> = v["cases"].as_array().unwrap().iter().map(|c| c["subcase"].as_str().unwrap()).collect();
    assert_eq!(cases, ["Concave", "ConvexInterior", "ConvexTangent", "Obstacle"]);
    for f in ["phase.csv", "boundary.csv", "report.json", "case_obstacle.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    assert!(v["cases"].as_array().unwrap().iter().all(|c| c["summary"]["status"] == "Converged"));
}
