//! Query dispatch and the text documents the command line prints: JSON
//! results and reports, and plot-ready CSV curves and envelopes.
//!
//! All numbers are printed with [`format_g17`] and all keys in a fixed
//! order, so identical inputs give byte-identical output.

use std::fmt::Write as _;

use crate::axioms::{self, CheckRecord, VerificationReport};
use crate::dist::EmpiricalDistribution;
use crate::envelope::extremal_density;
use crate::error::RiskError;
use crate::measures::{
    cvar_choquet, cvar_min, maxvar_choquet, maxvar_mc, maxvar_mixture_exact, maxvar_mixture_quad,
    maxvar_spectral, var, CopyCount, QuadratureRule, RiskLevel,
};
use crate::numeric::format_g17;
use crate::sampler::SeededSampler;
use crate::table::{portfolio_law, IoError, IoResult, PortfolioSpec, ScenarioTable};

/// Points per panel when a mixture-quad query does not say.
pub const DEFAULT_QUAD_POINTS: usize = 16;

/// Minimal JSON tree with insertion-ordered objects.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Num(f64),
    Int(u64),
    Bool(bool),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj() -> Self {
        Json::Obj(Vec::new())
    }

    pub fn with(mut self, key: &str, value: Json) -> Self {
        if let Json::Obj(fields) = &mut self {
            fields.push((key.to_string(), value));
        }
        self
    }

    pub fn maybe(self, key: &str, value: Option<Json>) -> Self {
        match value {
            Some(v) => self.with(key, v),
            None => self,
        }
    }

    /// Two-space indented rendering with a trailing newline.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, depth: usize) {
        let pad = |out: &mut String, d: usize| {
            out.push('\n');
            out.extend(std::iter::repeat_n(' ', 2 * d));
        };
        match self {
            // JSON has no non-finite numbers.
            Json::Num(x) if !x.is_finite() => out.push_str("null"),
            Json::Num(x) => out.push_str(&format_g17(*x)),
            Json::Int(i) => write!(out, "{i}").expect("string write"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Str(s) => out.push_str(&serde_json::to_string(s).expect("string escape")),
            Json::Arr(items) if items.is_empty() => out.push_str("[]"),
            Json::Obj(fields) if fields.is_empty() => out.push_str("{}"),
            Json::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    pad(out, depth + 1);
                    item.write(out, depth + 1);
                }
                pad(out, depth);
                out.push(']');
            }
            Json::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    pad(out, depth + 1);
                    out.push_str(&serde_json::to_string(k).expect("string escape"));
                    out.push_str(": ");
                    v.write(out, depth + 1);
                }
                pad(out, depth);
                out.push('}');
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Var,
    Cvar,
    Maxvar,
    Minvar,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::Var => "var",
            Measure::Cvar => "cvar",
            Measure::Maxvar => "maxvar",
            Measure::Minvar => "minvar",
        }
    }

    pub fn default_method(self) -> Method {
        match self {
            Measure::Var => Method::Exact,
            Measure::Cvar => Method::Min,
            Measure::Maxvar | Measure::Minvar => Method::Choquet,
        }
    }

    fn takes_level(self) -> bool {
        matches!(self, Measure::Var | Measure::Cvar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Quantile lookup, for VaR.
    Exact,
    /// Minimization over atoms, for CVaR.
    Min,
    Choquet,
    Spectral,
    MixtureExact,
    MixtureQuad,
    Mc,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Exact,
        Method::Min,
        Method::Choquet,
        Method::Spectral,
        Method::MixtureExact,
        Method::MixtureQuad,
        Method::Mc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Min => "min",
            Method::Choquet => "choquet",
            Method::Spectral => "spectral",
            Method::MixtureExact => "mixture-exact",
            Method::MixtureQuad => "mixture-quad",
            Method::Mc => "mc",
        }
    }

    pub fn parse(text: &str) -> IoResult<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == text)
            .ok_or_else(|| IoError::Usage(format!("unknown method {text:?}")))
    }

    fn applies_to(self, measure: Measure) -> bool {
        match measure {
            Measure::Var => self == Method::Exact,
            Measure::Cvar => matches!(self, Method::Min | Method::Choquet),
            Measure::Maxvar | Measure::Minvar => !matches!(self, Method::Exact | Method::Min),
        }
    }
}

/// One risk evaluation request.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskQuery {
    pub measure: Measure,
    pub alpha: Option<RiskLevel>,
    pub n: Option<CopyCount>,
    pub method: Method,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    /// Panel count for mixture-quad; `None` snaps one panel to each atom.
    pub panels: Option<usize>,
    pub points: Option<usize>,
}

impl RiskQuery {
    pub fn new(measure: Measure) -> Self {
        Self {
            measure,
            alpha: None,
            n: None,
            method: measure.default_method(),
            trials: None,
            seed: None,
            panels: None,
            points: None,
        }
    }

    /// Checks which parameters are present for the measure and method.
    pub fn validate(&self) -> IoResult<()> {
        let m = self.measure.name();
        let usage = |msg: String| Err(IoError::Usage(msg));
        if !self.method.applies_to(self.measure) {
            return usage(format!(
                "method {} does not apply to {m}",
                self.method.name()
            ));
        }
        if self.measure.takes_level() != self.alpha.is_some() {
            return usage(if self.alpha.is_some() {
                format!("{m} takes no --alpha")
            } else {
                format!("{m} needs --alpha")
            });
        }
        if self.measure.takes_level() == self.n.is_some() {
            return usage(if self.n.is_some() {
                format!("{m} takes no --n")
            } else {
                format!("{m} needs --n")
            });
        }
        let mc = self.method == Method::Mc;
        if mc && (self.trials.is_none() || self.seed.is_none()) {
            return usage("method mc needs --trials and --seed".into());
        }
        if !mc && (self.trials.is_some() || self.seed.is_some()) {
            return usage("--trials and --seed apply only to method mc".into());
        }
        if self.method != Method::MixtureQuad && (self.panels.is_some() || self.points.is_some()) {
            return usage("--panels and --points apply only to method mixture-quad".into());
        }
        Ok(())
    }
}

struct Evaluation {
    value: f64,
    std_error: Option<f64>,
    beta_star: Option<f64>,
    rule: Option<QuadratureRule>,
}

impl Evaluation {
    fn value(value: f64) -> Self {
        Self {
            value,
            std_error: None,
            beta_star: None,
            rule: None,
        }
    }
}

fn evaluate_maxvar(d: &EmpiricalDistribution, n: CopyCount, q: &RiskQuery) -> IoResult<Evaluation> {
    Ok(match q.method {
        Method::Choquet => Evaluation::value(maxvar_choquet(d, n)),
        Method::Spectral => Evaluation::value(maxvar_spectral(d, n)),
        Method::MixtureExact => Evaluation::value(maxvar_mixture_exact(d, n)),
        Method::MixtureQuad => {
            let points = q.points.unwrap_or(DEFAULT_QUAD_POINTS);
            let rule = match q.panels {
                Some(p) => QuadratureRule::new(p, points)?,
                None => QuadratureRule::snapped_to(d, points)?,
            };
            Evaluation {
                rule: Some(rule),
                ..Evaluation::value(maxvar_mixture_quad(d, n, rule)?)
            }
        }
        Method::Mc => {
            let seed = q.seed.expect("validated");
            let mut s = SeededSampler::new(seed, 0);
            let est = maxvar_mc(d, n, q.trials.expect("validated"), &mut s)?;
            Evaluation {
                std_error: Some(est.std_error),
                ..Evaluation::value(est.estimate)
            }
        }
        Method::Exact | Method::Min => unreachable!("validated"),
    })
}

fn evaluate(d: &EmpiricalDistribution, q: &RiskQuery) -> IoResult<Evaluation> {
    Ok(match q.measure {
        Measure::Var => Evaluation::value(var(d, q.alpha.expect("validated"))),
        Measure::Cvar => {
            let level = q.alpha.expect("validated");
            let best = cvar_min(d, level);
            let value = if q.method == Method::Choquet {
                cvar_choquet(d, level)
            } else {
                best.value
            };
            Evaluation {
                beta_star: Some(best.beta_star),
                ..Evaluation::value(value)
            }
        }
        Measure::Maxvar => evaluate_maxvar(d, q.n.expect("validated"), q)?,
        Measure::Minvar => {
            let mut e = evaluate_maxvar(&d.affine(-1.0, 0.0)?, q.n.expect("validated"), q)?;
            e.value = -e.value;
            e
        }
    })
}

/// Evaluates the query on the portfolio law and renders the result as JSON:
/// `{measure, params{alpha?, n?, method, trials?, seed?, panels?, points?},
/// value, std_error?, beta_star?, atoms_used}`.
pub fn run_query(t: &ScenarioTable, p: &PortfolioSpec, q: &RiskQuery) -> IoResult<String> {
    q.validate()?;
    let d = portfolio_law(t, p)?;
    let e = evaluate(&d, q)?;
    let params = Json::obj()
        .maybe("alpha", q.alpha.map(|a| Json::Num(a.alpha())))
        .maybe("n", q.n.map(|n| Json::Int(n.get() as u64)))
        .with("method", Json::Str(q.method.name().into()))
        .maybe("trials", q.trials.map(Json::Int))
        .maybe("seed", q.seed.map(Json::Int))
        .maybe("panels", e.rule.map(|r| Json::Int(r.panels() as u64)))
        .maybe(
            "points",
            e.rule.map(|r| Json::Int(r.points_per_panel() as u64)),
        );
    Ok(Json::obj()
        .with("measure", Json::Str(q.measure.name().into()))
        .with("params", params)
        .with("value", Json::Num(e.value))
        .maybe("std_error", e.std_error.map(Json::Num))
        .maybe("beta_star", e.beta_star.map(Json::Num))
        .with("atoms_used", Json::Int(d.len() as u64))
        .render())
}

/// Parameter sweep for [`emit_curve`].
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// CVaR over a grid of levels.
    Alpha(Vec<f64>),
    /// MAXVAR over copy counts.
    Copies(Vec<u32>),
}

impl Sweep {
    /// `values` is a comma-separated list; copy counts also accept an
    /// inclusive range `lo..hi`.
    pub fn parse(measure: Measure, values: &str) -> IoResult<Self> {
        let parts = || values.split(',').map(str::trim).filter(|s| !s.is_empty());
        let bad = |s: &str| IoError::Usage(format!("bad grid value {s:?}"));
        match measure {
            Measure::Cvar => Ok(Sweep::Alpha(
                parts()
                    .map(|s| s.parse().map_err(|_| bad(s)))
                    .collect::<IoResult<_>>()?,
            )),
            Measure::Maxvar => {
                let mut out = Vec::new();
                for s in parts() {
                    if let Some((lo, hi)) = s.split_once("..") {
                        let lo: u32 = lo.trim().parse().map_err(|_| bad(s))?;
                        let hi: u32 = hi.trim().parse().map_err(|_| bad(s))?;
                        out.extend(lo..=hi);
                    } else {
                        let n: f64 = s.parse().map_err(|_| bad(s))?;
                        out.push(CopyCount::from_real(n)?.get());
                    }
                }
                Ok(Sweep::Copies(out))
            }
            other => Err(IoError::Usage(format!(
                "curve supports cvar and maxvar, not {}",
                other.name()
            ))),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Sweep::Alpha(v) => v.is_empty(),
            Sweep::Copies(v) => v.is_empty(),
        }
    }
}

/// CSV `param,value` with one row per grid point, from the exact routes.
pub fn emit_curve(t: &ScenarioTable, p: &PortfolioSpec, sweep: &Sweep) -> IoResult<String> {
    if sweep.is_empty() {
        return Err(RiskError::out_of_range("curve grid size", 0.0).into());
    }
    let d = portfolio_law(t, p)?;
    let mut out = String::from("param,value\n");
    match sweep {
        Sweep::Alpha(grid) => {
            for &a in grid {
                let v = cvar_min(&d, RiskLevel::new(a)?).value;
                writeln!(out, "{},{}", format_g17(a), format_g17(v)).expect("string write");
            }
        }
        Sweep::Copies(grid) => {
            for &n in grid {
                let v = maxvar_choquet(&d, CopyCount::new(n)?);
                writeln!(out, "{n},{}", format_g17(v)).expect("string write");
            }
        }
    }
    Ok(out)
}

/// CSV `value,prob,q` with the extremal density, then `# E[XQ]=<value>`.
pub fn emit_envelope(t: &ScenarioTable, p: &PortfolioSpec, n: CopyCount) -> IoResult<String> {
    let d = portfolio_law(t, p)?;
    let e = extremal_density(&d, n);
    let mut out = String::from("value,prob,q\n");
    for ((v, pr), q) in d.atoms().zip(e.q()) {
        writeln!(
            out,
            "{},{},{}",
            format_g17(v),
            format_g17(pr),
            format_g17(*q)
        )
        .expect("string write");
    }
    writeln!(out, "# E[XQ]={}", format_g17(e.pairing(&d))).expect("string write");
    Ok(out)
}

fn record_json(r: &CheckRecord) -> Json {
    Json::obj()
        .with("name", Json::Str(r.name.clone()))
        .with("passed", Json::Bool(r.passed))
        .with("violation", Json::Num(r.violation))
        .with("tolerance", Json::Num(r.tolerance))
        .with("evaluations", Json::Int(r.evaluations))
        .with("witness", Json::Str(r.witness.clone()))
}

fn report_json(r: &VerificationReport) -> Json {
    Json::obj().with("passed", Json::Bool(r.passed)).with(
        "checks",
        Json::Arr(r.checks.iter().map(record_json).collect()),
    )
}

/// Stream index for data checks, clear of the suite's per-trial streams.
const DATA_STREAM: u64 = u64::MAX;

/// Checks on the table itself: every single-column law and every column
/// pair (on their joint scenarios).
pub fn verify_table(t: &ScenarioTable, n: CopyCount, seed: u64) -> IoResult<VerificationReport> {
    let mut records = Vec::new();
    let mut s = SeededSampler::new(seed, DATA_STREAM);
    for name in t.columns() {
        let d = portfolio_law(t, &PortfolioSpec::single(name))?;
        let tag = format!("column {name}");
        let mut rs = vec![
            axioms::check_translation(&d, n, 1.0)?,
            axioms::check_positive_homogeneity(&d, n, 2.0)?,
            axioms::check_finite_bound(&d, n),
        ];
        if !d.is_constant() && n.get() >= 2 {
            rs.push(axioms::check_averseness(&d, n)?);
        }
        rs.extend(axioms::check_identities(&d, n, RiskLevel::new(0.5)?));
        rs.extend(axioms::check_duality(&d, n, &mut s)?);
        records.extend(rs.into_iter().map(|mut r| {
            r.witness = format!("{tag}; {}", r.witness);
            r
        }));
    }
    let cols = t.columns();
    for (i, a) in cols.iter().enumerate() {
        for b in &cols[i + 1..] {
            let pair = t.pair(a, b)?;
            let tag = format!("columns {a},{b}");
            let mut rs = vec![
                axioms::check_subadditivity(&pair, n),
                axioms::check_convexity(&pair, n, 0.5)?,
                axioms::check_l2_continuity(&pair, n),
            ];
            if pair.x().iter().zip(pair.y()).all(|(x, y)| x <= y) {
                rs.push(axioms::check_monotonicity(&pair, n)?);
            }
            records.extend(rs.into_iter().map(|mut r| {
                r.witness = format!("{tag}; {}", r.witness);
                r
            }));
        }
    }
    Ok(VerificationReport::from_records(seed, 0, records))
}

/// Runs the table checks and the randomized suite. Returns the JSON report
/// and the names of failing checks.
pub fn cmd_verify(
    t: &ScenarioTable,
    n: CopyCount,
    seed: u64,
    trials: u64,
) -> IoResult<(String, Vec<String>)> {
    let suite = axioms::run_suite(seed, trials)?;
    let data = verify_table(t, n, seed)?;
    let failures = failing_checks(&data, &suite);
    let passed = failures.is_empty();
    let doc = Json::obj()
        .with("n", Json::Int(n.get() as u64))
        .with("seed", Json::Int(seed))
        .with("trials", Json::Int(trials))
        .with("passed", Json::Bool(passed))
        .with("data", report_json(&data))
        .with("suite", report_json(&suite));
    Ok((doc.render(), failures))
}

/// Names of failing checks, prefixed by where they ran.
fn failing_checks(data: &VerificationReport, suite: &VerificationReport) -> Vec<String> {
    data.failures()
        .map(|c| format!("data:{}", c.name))
        .chain(suite.failures().map(|c| format!("suite:{}", c.name)))
        .collect()
}
