use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use qside::suite::{SuiteRun, VerificationReport};

const SEED: &str = "42";
const RUNTIME_LIMIT: Duration = Duration::from_secs(300);

struct Verdict {
    pass: bool,
    detail: String,
}

struct Reports<'a>(&'a [VerificationReport]);

impl<'a> Reports<'a> {
    fn named(&self, name: &str) -> Vec<&'a VerificationReport> {
        self.0.iter().filter(|r| r.check_name == name).collect()
    }

    /// At least `count` reports of `name`, each free of errors with `lhs ≤ rhs + tol`.
    fn at_most(&self, name: &str, count: usize, tol: f64) -> Verdict {
        let rs = self.named(name);
        let worst = rs
            .iter()
            .map(|r| r.rhs - r.lhs)
            .fold(f64::INFINITY, f64::min);
        let ok = rs.len() >= count && rs.iter().all(|r| r.error.is_none() && r.lhs <= r.rhs + tol);
        Verdict {
            pass: ok,
            detail: format!("{name}: {} instances, min slack {worst:.3e}", rs.len()),
        }
    }

    /// At least `count` reports of `name` with `|lhs − rhs| ≤ tol`.
    fn equal(&self, name: &str, count: usize, tol: f64) -> Verdict {
        let rs = self.named(name);
        let worst = rs.iter().map(|r| (r.lhs - r.rhs).abs()).fold(0.0, f64::max);
        let ok = rs.len() >= count
            && rs
                .iter()
                .all(|r| r.error.is_none() && (r.lhs - r.rhs).abs() <= tol);
        Verdict {
            pass: ok,
            detail: format!("{name}: {} instances, max spread {worst:.3e}", rs.len()),
        }
    }

    /// Reports decided in rational arithmetic.
    fn exact(&self, name: &str, count: usize) -> Verdict {
        let rs = self.named(name);
        let ok = rs.len() >= count
            && rs
                .iter()
                .all(|r| r.pass && r.flags.iter().any(|f| f == "exact"));
        Verdict {
            pass: ok,
            detail: format!("{name}: {} families exact", rs.len()),
        }
    }
}

fn all(parts: Vec<Verdict>) -> Verdict {
    Verdict {
        pass: parts.iter().all(|v| v.pass),
        detail: parts
            .into_iter()
            .map(|v| v.detail)
            .collect::<Vec<_>>()
            .join("; "),
    }
}

fn run_suite(out: &Path) -> (Option<i32>, Duration) {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_qside"))
        .args([
            "verify",
            "all",
            "--seed",
            SEED,
            "--out",
            out.to_str().unwrap(),
        ])
        .stdout(std::process::Stdio::null())
        .status()
        .expect("qside runs");
    (status.code(), start.elapsed())
}

fn criteria(r: &Reports, elapsed: Duration) -> Vec<(&'static str, Verdict)> {
    let mut c1 = r.equal("theorem1", 50, 1e-6);
    c1.pass &= elapsed <= RUNTIME_LIMIT;
    c1.detail += &format!("; full suite {:.1}s", elapsed.as_secs_f64());

    let lemma5 = r.named("lemma5");
    let toeplitz = Verdict {
        pass: lemma5
            .iter()
            .all(|x| x.descriptor.family.as_deref() == Some("toeplitz(3,1)")),
        detail: "family toeplitz(3,1)".into(),
    };
    let delta2 = r
        .named("lemma7")
        .iter()
        .filter(|x| x.descriptor.delta == Some(2.0))
        .count();
    let handcrafted = Verdict {
        pass: delta2 >= 20,
        detail: format!("{delta2} instances at delta 2"),
    };

    vec![
        ("theorem 1 equality", c1),
        (
            "lemma 4 on standard and non-standard states",
            all(vec![
                r.equal("lemma4.standard", 50, 1e-6),
                r.at_most("lemma4.non-standard", 20, 1e-8),
            ]),
        ),
        (
            "lemma 5 and corollary 1",
            all(vec![
                r.at_most("lemma5", 20, 1e-9),
                toeplitz,
                r.equal("corollary1", 20, 1e-6),
            ]),
        ),
        (
            "lemmas 7 and 9 with delta reduction",
            all(vec![
                r.at_most("lemma7", 20, 1e-9),
                handcrafted,
                r.at_most("lemma9", 20, 1e-9),
                r.equal("lemma7.reduction", 20, 1e-9),
            ]),
        ),
        (
            "coding theorems 6/8/10 and the older bound",
            all(vec![
                r.at_most("lemma6", 20, 1e-9),
                r.at_most("lemma8", 20, 1e-9),
                r.at_most("lemma10", 20, 1e-9),
                r.at_most("coding.ref-form", 20, 1e-9),
                r.at_most("coding.ref-looser", 20, 0.0),
            ]),
        ),
        (
            "distance relations",
            all([
                "d1-index",
                "d1-prime.lower",
                "d1-prime.upper",
                "d1-order.lower",
                "d1-order.upper",
            ]
            .into_iter()
            .map(|n| r.at_most(n, 50, 1e-8))
            .collect()),
        ),
        (
            "lemmas 2-3 chain",
            all(["lemma2", "lemma3", "tilde-order", "hmax-tilde"]
                .into_iter()
                .map(|n| r.at_most(n, 50, 1e-9))
                .collect()),
        ),
        (
            "entropy engine oracles",
            all(vec![
                r.equal("engine.hmin-pguess", 10, 1e-6),
                r.equal("engine.helstrom", 10, 1e-8),
                r.equal("engine.max-entangled", 5, 1e-6),
                r.equal("engine.hmax-duality", 6, 1e-6),
                r.at_most("engine.pgm", 10, 0.0),
            ]),
        ),
        (
            "family certification",
            all(vec![
                r.exact("certification.universal", 12),
                r.exact("certification.counting-bound", 12),
                r.exact("certification.dual-counting-bound", 1),
                r.exact("certification.conversion", 1),
                r.exact("certification.conversion-converse", 1),
            ]),
        ),
        (
            "qkd bound conversion at eps 0",
            all(vec![
                r.at_most("qkd.lhl", 10, 1e-9),
                r.at_most("qkd.pec", 10, 1e-9),
                r.at_most("qkd.reverse", 10, 1e-9),
                r.at_most("qkd.ucr", 10, 1e-9),
                r.equal("qkd.ucr-equals-lhl", 10, 1e-9),
            ]),
        ),
    ]
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    let (code, elapsed) = run_suite(&first);
    let (code2, _) = run_suite(&second);

    let mut lines = Vec::new();
    match fs::read_to_string(&first)
        .ok()
        .and_then(|t| SuiteRun::from_json(&t).ok())
    {
        Some(run) => {
            let reports = Reports(&run.reports);
            lines.extend(criteria(&reports, elapsed));
            if code != Some(0) {
                let failing: Vec<&str> = run.failures().map(|r| r.check_name.as_str()).collect();
                eprintln!("verify all exited {code:?}; failing reports: {failing:?}");
            }
        }
        None => eprintln!("verify all exited {code:?} without a loadable report"),
    }
    let a = fs::read(&first).unwrap_or_default();
    let b = fs::read(&second).unwrap_or_default();
    lines.push((
        "determinism",
        Verdict {
            pass: !a.is_empty() && a == b && code2 == code,
            detail: format!("{} and {} bytes", a.len(), b.len()),
        },
    ));

    let mut ok = lines.len() == 11;
    for (i, (name, v)) in lines.iter().enumerate() {
        println!(
            "{} criterion {:>2} {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
        ok &= v.pass;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
