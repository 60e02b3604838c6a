use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qside::algorithms::random_standard_form;
use qside::entropy::{hmax, hmax_direct, hmin, pguess, EntropyResult, Method};
use qside::gf2::HashFamily;
use qside::quantum::{PureState, QOperator, StandardForm};
use qside::random::rng_from_seed;
use qside::suite::{run_all, Check, FamilyKind, SuiteConfig, SuiteRun, Tolerances};

/// Privacy amplification, error correction and data compression with quantum
/// side information on small explicit states.
#[derive(Parser)]
#[command(name = "qside", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random standard-form instance to JSON.
    GenState {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Qubits in `A`.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate one entropic quantity of a stored state.
    Entropy(EntropyArgs),
    /// Run verification checks; `all` runs every check.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    Hmin,
    Hmax,
    Pguess,
}

#[derive(Clone, Copy, ValueEnum)]
enum Part {
    /// The pure `[A, B, E]` state.
    Pure,
    /// `ρ_{Z^A E}`.
    Zae,
    /// `ρ_{X^A B}`.
    Xab,
}

#[derive(Args)]
struct EntropyArgs {
    quantity: Quantity,
    /// An operator, a pure state or a standard form written by `gen-state`.
    state: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "A")]
    target: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "E")]
    side: Vec<String>,
    /// Which member of a standard form to read; inferred from the registers otherwise.
    #[arg(long)]
    part: Option<Part>,
    /// Also evaluate `hmax` by purification duality and report both values.
    #[arg(long)]
    cross_check: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(required = true, value_parser = parse_selection)]
    checks: Vec<Selection>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_parser = parse_family)]
    family: Option<FamilyKind>,
    /// JSON hash family replacing the built-in almost universal₂ families.
    #[arg(long)]
    delta_family: Option<PathBuf>,
    /// Instances per check.
    #[arg(long)]
    instances: Option<usize>,
    /// Replaces every tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON report; the CSV summary goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
enum Selection {
    All,
    One(Check),
}

fn parse_selection(s: &str) -> Result<Selection, String> {
    if s == "all" {
        return Ok(Selection::All);
    }
    s.parse().map(Selection::One).map_err(|_| {
        let names: Vec<&str> = Check::ALL.iter().map(|c| c.name()).collect();
        format!("expected `all` or one of {}", names.join(", "))
    })
}

fn parse_family(s: &str) -> Result<FamilyKind, String> {
    s.parse().map_err(|e: qside::Error| e.to_string())
}

/// Usage or IO failure, reported with exit status 2.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenState { seed, n, out } => gen_state(seed, n, &out).map(|()| true),
        Command::Entropy(args) => entropy(&args).map(|()| true),
        Command::Verify(args) => verify(&args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn gen_state(seed: u64, n: usize, out: &Path) -> Result<(), Fatal> {
    let sf = random_standard_form(n, &mut rng_from_seed(seed))?;
    fs::write(out, serde_json::to_string_pretty(&sf)?)?;
    Ok(())
}

fn read(path: &Path) -> Result<String, Fatal> {
    fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn load_state(path: &Path, part: Option<Part>, registers: &[&str]) -> Result<QOperator, Fatal> {
    let text = read(path)?;
    if let Ok(sf) = serde_json::from_str::<StandardForm>(&text) {
        let part = part.unwrap_or(if registers.contains(&"B") && registers.contains(&"E") {
            Part::Pure
        } else if registers.contains(&"B") {
            Part::Xab
        } else {
            Part::Zae
        });
        return Ok(match part {
            Part::Pure => sf.pure.density(),
            Part::Zae => sf.rho_zae,
            Part::Xab => sf.rho_xab,
        });
    }
    if part.is_some() {
        return Err(Fatal(format!(
            "{}: --part needs a standard form",
            path.display()
        )));
    }
    if let Ok(psi) = PureState::from_json(&text) {
        return Ok(psi.density());
    }
    let s = QOperator::from_json(&text).map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
    s.validate_state()?;
    Ok(s)
}

fn entropy(args: &EntropyArgs) -> Result<(), Fatal> {
    let target: Vec<&str> = args.target.iter().map(String::as_str).collect();
    let side: Vec<&str> = args.side.iter().map(String::as_str).collect();
    let registers: Vec<&str> = target.iter().chain(&side).copied().collect();
    let s = load_state(&args.state, args.part, &registers)?;
    let s = s.marginal(&registers)?;
    let result = match args.quantity {
        Quantity::Hmin => hmin(&s, &target, &side)?,
        Quantity::Hmax if args.cross_check => hmax(&s, &target, &side)?,
        Quantity::Hmax => hmax_direct(&s, &target, &side)?,
        Quantity::Pguess => {
            let [t] = target[..] else {
                return Err(Fatal("pguess takes a single target register".into()));
            };
            let p = pguess(&s, t, &side)?;
            EntropyResult {
                value: p,
                method: Method::SdpPrimal,
                gap: 0.0,
                cross_check: None,
            }
        }
    };
    println!("{}", serde_json::to_string(&result)?);
    Ok(())
}

fn resolve_config(args: &VerifyArgs) -> Result<SuiteConfig, Fatal> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str(&read(path)?)
            .map_err(|e| Fatal(format!("{}: {e}", path.display())))?,
        None => SuiteConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.n.is_some() {
        cfg.n = args.n;
    }
    if args.m.is_some() {
        cfg.m = args.m;
    }
    if let Some(family) = args.family {
        cfg.family = family;
    }
    if let Some(path) = &args.delta_family {
        let fam = HashFamily::from_json(&read(path)?)
            .map_err(|e| Fatal(format!("{}: {e}", path.display())))?;
        cfg.delta_family = Some(fam);
    }
    if args.instances.is_some() {
        cfg.instances = args.instances;
    }
    if let Some(tol) = args.tol {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Fatal(format!(
                "tolerance {tol} must be finite and non-negative"
            )));
        }
        cfg.tolerances = Tolerances::uniform(tol);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn selected(args: &VerifyArgs) -> Vec<Check> {
    if args.checks.iter().any(|s| matches!(s, Selection::All)) {
        return Check::ALL.to_vec();
    }
    let mut out: Vec<Check> = Vec::new();
    for s in &args.checks {
        if let Selection::One(c) = s {
            if !out.contains(c) {
                out.push(*c);
            }
        }
    }
    out
}

fn verify(args: &VerifyArgs) -> Result<bool, Fatal> {
    let cfg = resolve_config(args)?;
    let checks = selected(args);
    let start = Instant::now();
    let run = match args.jobs {
        Some(0) => return Err(Fatal("--jobs must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()?
            .install(|| run_all(&cfg, &checks))?,
        None => run_all(&cfg, &checks)?,
    };
    if let Some(out) = &args.out {
        write_outputs(&run, out)?;
    }
    print_summary(&run, start.elapsed().as_secs_f64());
    for r in run.failures() {
        let d = &r.descriptor;
        match &r.error {
            Some(e) => eprintln!(
                "FAIL {} (instance {}, n={}, m={}): {e}",
                r.check_name, d.instance, d.n, d.m
            ),
            None => eprintln!(
                "FAIL {} (instance {}, n={}, m={}): lhs {:e} rhs {:e} slack {:e}",
                r.check_name, d.instance, d.n, d.m, r.lhs, r.rhs, r.slack
            ),
        }
    }
    Ok(run.passed)
}

fn write_outputs(run: &SuiteRun, out: &Path) -> Result<(), Fatal> {
    fs::write(out, run.to_json()?).map_err(|e| Fatal(format!("{}: {e}", out.display())))?;
    let csv = out.with_extension("csv");
    let file = fs::File::create(&csv).map_err(|e| Fatal(format!("{}: {e}", csv.display())))?;
    run.write_csv(file)?;
    Ok(())
}

fn print_summary(run: &SuiteRun, seconds: f64) {
    println!(
        "{:<40} {:>9} {:>7} {:>12} {:>12}",
        "check", "instances", "passed", "min slack", "max spread"
    );
    for row in &run.summary {
        println!(
            "{:<40} {:>9} {:>7} {:>12} {:>12}",
            row.check,
            row.instances,
            row.passed,
            sci(row.min_slack),
            sci(row.max_spread)
        );
    }
    let failed = run.failures().count();
    println!(
        "{} reports, {} failed, {:.1}s",
        run.reports.len(),
        failed,
        seconds
    );
}

fn sci(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3e}"))
}
