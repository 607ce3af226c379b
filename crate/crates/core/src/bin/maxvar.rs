//! Command-line front end: risk queries, curves, envelopes and verification
//! on scenario CSV files.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or verification error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use maxvar_core::report::{
    cmd_verify, emit_curve, emit_envelope, run_query, Measure, Method, RiskQuery, Sweep,
};
use maxvar_core::table::{load_csv, IoError, IoResult, PortfolioSpec, ScenarioTable};
use maxvar_core::{CopyCount, RiskLevel};

#[derive(Parser)]
#[command(
    name = "maxvar",
    version,
    about = "MAXVAR, CVaR and VaR on scenario files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Value-at-Risk at level alpha.
    Var(LevelArgs),
    /// Conditional Value-at-Risk at level alpha.
    Cvar(LevelArgs),
    /// Expected maximum of n independent copies.
    Maxvar(CopiesArgs),
    /// Expected minimum of n independent copies.
    Minvar(CopiesArgs),
    /// Extremal dual density for MAXVAR with n copies.
    Envelope(EnvelopeArgs),
    /// CVaR over an alpha grid, or MAXVAR over a range of n.
    Curve(CurveArgs),
    /// Axiom and identity checks on the data plus a randomized suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario CSV: header row, optional "prob" column.
    #[arg(long)]
    input: PathBuf,
    /// Portfolio weights, e.g. "a=0.5,b=0.5".
    #[arg(long, conflicts_with = "column")]
    weights: Option<String>,
    /// Single-column portfolio.
    #[arg(long)]
    column: Option<String>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LevelArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    alpha: f64,
    /// "exact" for var; "min" or "choquet" for cvar.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Args)]
struct CopiesArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: f64,
    /// choquet, spectral, mixture-exact, mixture-quad or mc.
    #[arg(long)]
    method: Option<String>,
    /// Monte Carlo trials (method mc).
    #[arg(long)]
    trials: Option<u64>,
    /// Monte Carlo seed (method mc).
    #[arg(long)]
    seed: Option<u64>,
    /// Quadrature panels (method mixture-quad); default one per atom.
    #[arg(long)]
    panels: Option<usize>,
    /// Gauss-Legendre points per panel (method mixture-quad).
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args)]
struct EnvelopeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: f64,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    common: Common,
    /// cvar or maxvar.
    #[arg(long)]
    measure: String,
    /// Comma-separated alphas for cvar; copy counts or "lo..hi" for maxvar.
    #[arg(long)]
    grid: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 2.0)]
    n: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
}

fn portfolio(c: &Common, t: &ScenarioTable) -> IoResult<PortfolioSpec> {
    let spec = match (&c.weights, &c.column) {
        (Some(w), _) => PortfolioSpec::parse(w)?,
        (None, Some(col)) => PortfolioSpec::single(col),
        (None, None) => match t.columns() {
            [only] => PortfolioSpec::single(only),
            _ => {
                return Err(IoError::Usage(
                    "table has several columns; pass --column or --weights".into(),
                ))
            }
        },
    };
    spec.validate(t)?;
    Ok(spec)
}

fn load(c: &Common) -> IoResult<(ScenarioTable, PortfolioSpec)> {
    let t = load_csv(&c.input)?;
    let p = portfolio(c, &t)?;
    Ok((t, p))
}

fn method(measure: Measure, text: &Option<String>) -> IoResult<Method> {
    text.as_deref()
        .map_or(Ok(measure.default_method()), Method::parse)
}

fn level_query(measure: Measure, a: &LevelArgs) -> IoResult<String> {
    let (t, p) = load(&a.common)?;
    let mut q = RiskQuery::new(measure);
    q.method = method(measure, &a.method)?;
    q.alpha = Some(RiskLevel::new(a.alpha)?);
    run_query(&t, &p, &q)
}

fn copies_query(measure: Measure, a: &CopiesArgs) -> IoResult<String> {
    let (t, p) = load(&a.common)?;
    let mut q = RiskQuery::new(measure);
    q.method = method(measure, &a.method)?;
    q.n = Some(CopyCount::from_real(a.n)?);
    q.trials = a.trials;
    q.seed = a.seed;
    q.panels = a.panels;
    q.points = a.points;
    run_query(&t, &p, &q)
}

/// Runs the command; returns the document to emit and, for verify, the
/// failing checks.
fn execute(cmd: &Command) -> IoResult<(String, &Common, Vec<String>)> {
    Ok(match cmd {
        Command::Var(a) => (level_query(Measure::Var, a)?, &a.common, vec![]),
        Command::Cvar(a) => (level_query(Measure::Cvar, a)?, &a.common, vec![]),
        Command::Maxvar(a) => (copies_query(Measure::Maxvar, a)?, &a.common, vec![]),
        Command::Minvar(a) => (copies_query(Measure::Minvar, a)?, &a.common, vec![]),
        Command::Envelope(a) => {
            let (t, p) = load(&a.common)?;
            (
                emit_envelope(&t, &p, CopyCount::from_real(a.n)?)?,
                &a.common,
                vec![],
            )
        }
        Command::Curve(a) => {
            let measure = match a.measure.as_str() {
                "cvar" => Measure::Cvar,
                "maxvar" => Measure::Maxvar,
                other => return Err(IoError::Usage(format!("curve measure {other:?}"))),
            };
            let sweep = Sweep::parse(measure, &a.grid)?;
            let (t, p) = load(&a.common)?;
            (emit_curve(&t, &p, &sweep)?, &a.common, vec![])
        }
        Command::Verify(a) => {
            let t = load_csv(&a.common.input)?;
            let n = CopyCount::from_real(a.n)?;
            let (doc, failures) = cmd_verify(&t, n, a.seed, a.trials)?;
            (doc, &a.common, failures)
        }
    })
}

fn emit(doc: &str, c: &Common) -> IoResult<()> {
    match &c.output {
        Some(path) => std::fs::write(path, doc).map_err(|e| IoError::Unwritable {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = execute(&cli.command).and_then(|(doc, common, failures)| {
        emit(&doc, common)?;
        if failures.is_empty() {
            Ok(())
        } else {
            Err(IoError::VerificationFailed(failures))
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("maxvar: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
