use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qside::quantum::{QOperator, RegisterLayout, StandardForm};
use qside::suite::SuiteRun;
use serde_json::Value;

fn qside(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qside"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn entropy_value(out: &Output) -> Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_operator(dir: &Path, name: &str, regs: &[(&str, usize)], diag: &[f64]) -> String {
    let layout = RegisterLayout::new(regs.iter().copied()).unwrap();
    let file = dir.join(name);
    fs::write(
        &file,
        QOperator::diagonal(layout, diag)
            .unwrap()
            .to_json()
            .unwrap(),
    )
    .unwrap();
    path(&file).to_owned()
}

#[test]
fn gen_state_round_trips_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for f in [&a, &b] {
        assert_eq!(
            qside(&["gen-state", "--seed", "1", "--n", "1", "--out", path(f)])
                .status
                .code(),
            Some(0)
        );
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let sf: StandardForm = serde_json::from_str(&text).unwrap();
    assert_eq!(sf.n(), 1);
    assert_eq!(sf.pure.layout().names(), ["A", "B", "E"]);
    assert_eq!(sf.rho_zae.layout().names(), ["A", "E"]);
    assert_eq!(sf.rho_xab.layout().names(), ["A", "B"]);
    let (dz, dx) = sf.measured_deviations().unwrap();
    assert!(dz < 1e-9 && dx < 1e-9);
}

#[test]
fn gen_state_rejects_bad_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    for n in ["0", "4"] {
        let r = qside(&["gen-state", "--n", n, "--out", path(&out)]);
        assert_eq!(r.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&r.stderr).contains("qubits"));
    }
    assert!(!out.exists());
}

#[test]
fn entropy_of_trivial_states() {
    let dir = tempfile::tempdir().unwrap();
    let uniform = write_operator(dir.path(), "u.json", &[("A", 2), ("E", 2)], &[0.25; 4]);
    let v = entropy_value(&qside(&["entropy", "hmin", &uniform]));
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(v["method"], "closed-form-classical");

    let point = write_operator(
        dir.path(),
        "p.json",
        &[("A", 2), ("B", 2)],
        &[0.5, 0.5, 0.0, 0.0],
    );
    let v = entropy_value(&qside(&["entropy", "hmax", &point, "--side", "B"]));
    assert!(v["value"].as_f64().unwrap().abs() < 1e-9);
    let v = entropy_value(&qside(&["entropy", "pguess", &point, "--side", "B"]));
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn hmax_cross_check_reports_both_paths() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    qside(&[
        "gen-state",
        "--seed",
        "3",
        "--n",
        "1",
        "--out",
        path(&state),
    ]);
    let v = entropy_value(&qside(&[
        "entropy",
        "hmax",
        path(&state),
        "--side",
        "B",
        "--cross-check",
    ]));
    let (a, b) = (
        v["value"].as_f64().unwrap(),
        v["cross_check"].as_f64().unwrap(),
    );
    assert!((a - b).abs() < 1e-6);
    let plain = entropy_value(&qside(&["entropy", "hmax", path(&state), "--side", "B"]));
    assert!(plain.get("cross_check").is_none());
    // the standard form makes the two conditional entropies complementary
    let hmin = entropy_value(&qside(&["entropy", "hmin", path(&state)]));
    assert!((hmin["value"].as_f64().unwrap() + a - 1.0).abs() < 1e-6);
}

#[test]
fn entropy_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{not json").unwrap();
    assert_eq!(
        qside(&["entropy", "hmin", path(&bad)]).status.code(),
        Some(2)
    );
    let uniform = write_operator(dir.path(), "u.json", &[("A", 2), ("E", 2)], &[0.25; 4]);
    let r = qside(&["entropy", "hmin", &uniform, "--side", "Q"]);
    assert_eq!(r.status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(
        qside(&["entropy", "hmin", path(&missing)]).status.code(),
        Some(2)
    );
    assert_eq!(
        qside(&["entropy", "renyi", &uniform]).status.code(),
        Some(2)
    );
}

#[test]
fn verify_writes_loadable_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let r = qside(&[
        "verify",
        "theorem1",
        "--seed",
        "7",
        "--n",
        "2",
        "--instances",
        "3",
        "--out",
        path(&out),
    ]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let run = SuiteRun::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(run.passed);
    assert_eq!(run.reports.len(), 3);
    assert_eq!(run.config.seed, 7);
    assert_eq!(run.config.n, Some(2));
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("check,instances,passed,min_slack,max_spread")
    );
    assert!(csv.lines().nth(1).unwrap().starts_with("theorem1,3,3,"));
}

#[test]
fn failing_check_exits_one_and_names_the_report() {
    // a zero tolerance leaves no room for solver round-off
    let r = qside(&[
        "verify",
        "theorem1",
        "--n",
        "2",
        "--instances",
        "2",
        "--tol",
        "0",
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("FAIL theorem1"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(qside(&["verify", "lemma99"]).status.code(), Some(2));
    assert_eq!(qside(&["verify"]).status.code(), Some(2));
    assert_eq!(
        qside(&["verify", "theorem1", "--n", "5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qside(&["verify", "theorem1", "--family", "random"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qside(&["verify", "theorem1", "--tol", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qside(&["verify", "theorem1", "--jobs", "0"]).status.code(),
        Some(2)
    );
    let r = qside(&[
        "verify",
        "theorem1",
        "--instances",
        "1",
        "--out",
        "/nonexistent/dir/r.json",
    ]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"seed": 5, "n": 1, "instances": 2, "family": "all-linear"}"#,
    )
    .unwrap();
    let out = dir.path().join("r.json");
    let r = qside(&[
        "verify",
        "theorem1",
        "--config",
        path(&cfg),
        "--seed",
        "6",
        "--jobs",
        "1",
        "--out",
        path(&out),
    ]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let run = SuiteRun::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(run.config.seed, 6);
    assert_eq!(run.config.n, Some(1));
    assert_eq!(run.reports.len(), 2);
    assert_eq!(run.config.family.name(), "all-linear");

    fs::write(&cfg, r#"{"seed": 5, "colour": "red"}"#).unwrap();
    assert_eq!(
        qside(&["verify", "theorem1", "--config", path(&cfg)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn delta_family_file_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("fam.json");
    let family = qside::suite::handcrafted_delta2_family().unwrap().family;
    fs::write(&fam, family.to_json().unwrap()).unwrap();
    let out = dir.path().join("r.json");
    let r = qside(&[
        "verify",
        "lhl-almost-universal2",
        "--instances",
        "2",
        "--delta-family",
        path(&fam),
        "--out",
        path(&out),
    ]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let run = SuiteRun::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(run.config.delta_family, Some(family));
    assert!(run.reports.iter().any(|r| r.descriptor.delta == Some(2.0)));
}
