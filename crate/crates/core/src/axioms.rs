//! Coherency and averseness checks for MAXVAR, and the randomized suite
//! that also sweeps the CVaR, mixture and duality identities.
//!
//! Every check returns a [`CheckRecord`] with a signed violation: the amount
//! by which the checked inequality fails (negative values are slack).

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::EmpiricalDistribution;
use crate::envelope::{core_check, dual_gap, extremal_density, mixture_density, CORE_TOL};
use crate::error::{Result, RiskError};
use crate::generate;
use crate::measures::{
    cvar_choquet, cvar_min, maxvar_choquet, maxvar_mixture_exact, maxvar_spectral, var, CopyCount,
    RiskLevel,
};
use crate::numeric::compensated_sum;
use crate::sampler::SeededSampler;

/// Joint law of `(X, Y)` on common scenarios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedScenarios {
    x: Vec<f64>,
    y: Vec<f64>,
    probs: Vec<f64>,
}

impl PairedScenarios {
    pub fn new(x: Vec<f64>, y: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(RiskError::EmptyInput);
        }
        if y.len() != x.len() || probs.len() != x.len() {
            return Err(RiskError::DimensionMismatch {
                expected: x.len(),
                actual: if y.len() != x.len() {
                    y.len()
                } else {
                    probs.len()
                },
            });
        }
        if x.iter().chain(&y).chain(&probs).any(|v| !v.is_finite()) {
            return Err(RiskError::NonFiniteValue("paired scenarios"));
        }
        if let Some(&p) = probs.iter().find(|&&p| p <= 0.0) {
            return Err(RiskError::out_of_range("scenario probability", p));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(RiskError::out_of_range("scenario probability total", total));
        }
        Ok(Self { x, y, probs })
    }

    /// Normalizes positive weights into scenario probabilities.
    pub fn from_weights(x: Vec<f64>, y: Vec<f64>, weights: &[f64]) -> Result<Self> {
        let total = compensated_sum(weights.iter().copied());
        if total.is_nan() || total <= 0.0 {
            return Err(RiskError::AllZeroWeights);
        }
        Self::new(x, y, weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let w = vec![1.0; x.len()];
        Self::from_weights(x, y, &w)
    }

    /// Product coupling of two laws.
    pub fn independent(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> Self {
        let mut x = Vec::with_capacity(a.len() * b.len());
        let mut y = Vec::with_capacity(a.len() * b.len());
        let mut w = Vec::with_capacity(a.len() * b.len());
        for (va, pa) in a.atoms() {
            for (vb, pb) in b.atoms() {
                x.push(va);
                y.push(vb);
                w.push(pa * pb);
            }
        }
        Self::from_weights(x, y, &w).expect("product of valid laws")
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn law_of<F: Fn(f64, f64) -> f64>(&self, f: F) -> EmpiricalDistribution {
        let pairs: Vec<(f64, f64)> = self
            .x
            .iter()
            .zip(&self.y)
            .zip(&self.probs)
            .map(|((&x, &y), &p)| (f(x, y), p))
            .collect();
        EmpiricalDistribution::from_samples(&pairs).expect("valid joint table")
    }

    pub fn law_x(&self) -> EmpiricalDistribution {
        self.law_of(|x, _| x)
    }

    pub fn law_y(&self) -> EmpiricalDistribution {
        self.law_of(|_, y| y)
    }

    pub fn law_sum(&self) -> EmpiricalDistribution {
        self.law_of(|x, y| x + y)
    }

    /// Law of `lambda X + (1 - lambda) Y`.
    pub fn law_mix(&self, lambda: f64) -> EmpiricalDistribution {
        self.law_of(|x, y| lambda * x + (1.0 - lambda) * y)
    }

    /// `E|X - Y|`.
    pub fn mean_abs_diff(&self) -> f64 {
        compensated_sum(
            self.x
                .iter()
                .zip(&self.y)
                .zip(&self.probs)
                .map(|((&x, &y), &p)| (x - y).abs() * p),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    /// Signed worst violation; at most `tolerance` when passing.
    pub violation: f64,
    pub tolerance: f64,
    pub witness: String,
    pub evaluations: u64,
}

impl CheckRecord {
    fn new(name: &str, violation: f64, tolerance: f64, witness: String) -> Self {
        Self {
            name: name.to_string(),
            passed: violation <= tolerance,
            violation,
            tolerance,
            witness,
            evaluations: 1,
        }
    }

    fn with_witness(mut self, witness: &str) -> Self {
        if !witness.is_empty() {
            self.witness = format!("{witness}; {}", self.witness);
        }
        self
    }

    fn margin(&self) -> f64 {
        self.violation - self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub trials: u64,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    /// Merges records into one row per check name (sorted by name), keeping
    /// the record closest to failing as the representative.
    pub fn from_records(
        seed: u64,
        trials: u64,
        records: impl IntoIterator<Item = CheckRecord>,
    ) -> Self {
        let mut rows: std::collections::BTreeMap<String, CheckRecord> = Default::default();
        for r in records {
            match rows.get_mut(&r.name) {
                None => {
                    rows.insert(r.name.clone(), r);
                }
                Some(row) => {
                    let evaluations = row.evaluations + r.evaluations;
                    let passed = row.passed && r.passed;
                    if r.margin() > row.margin() {
                        *row = r;
                    }
                    row.evaluations = evaluations;
                    row.passed = passed;
                }
            }
        }
        let checks: Vec<CheckRecord> = rows.into_values().collect();
        Self {
            seed,
            trials,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn mx(d: &EmpiricalDistribution, copies: CopyCount) -> f64 {
    maxvar_choquet(d, copies)
}

/// (A1) `maxvar_n(C) = C`, tolerance `1e-12 max(1, |C|)`.
pub fn check_constant(copies: CopyCount, c: f64) -> Result<CheckRecord> {
    let d = EmpiricalDistribution::constant(c)?;
    let diff = (mx(&d, copies) - c).abs();
    Ok(CheckRecord::new(
        "A1-constant",
        diff,
        1e-12 * c.abs().max(1.0),
        format!("C={c}, n={}", copies.get()),
    ))
}

/// `maxvar_n(X + Y) <= maxvar_n(X) + maxvar_n(Y)` on the joint table.
pub fn check_subadditivity(p: &PairedScenarios, copies: CopyCount) -> CheckRecord {
    let lhs = mx(&p.law_sum(), copies);
    let rhs = mx(&p.law_x(), copies) + mx(&p.law_y(), copies);
    CheckRecord::new(
        "subadditivity",
        lhs - rhs,
        1e-9,
        format!(
            "n={}, scenarios={}, slack={}",
            copies.get(),
            p.len(),
            rhs - lhs
        ),
    )
}

/// (A2) `maxvar_n(lambda X + (1-lambda) Y) <= lambda maxvar_n(X) + (1-lambda) maxvar_n(Y)`.
pub fn check_convexity(p: &PairedScenarios, copies: CopyCount, lambda: f64) -> Result<CheckRecord> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(RiskError::out_of_range("convexity weight", lambda));
    }
    let lhs = mx(&p.law_mix(lambda), copies);
    let rhs = lambda * mx(&p.law_x(), copies) + (1.0 - lambda) * mx(&p.law_y(), copies);
    Ok(CheckRecord::new(
        "A2-convexity",
        lhs - rhs,
        1e-9,
        format!("lambda={lambda}, n={}, scenarios={}", copies.get(), p.len()),
    ))
}

/// (A3) `X <= Y` scenario-wise implies `maxvar_n(X) <= maxvar_n(Y)`.
pub fn check_monotonicity(p: &PairedScenarios, copies: CopyCount) -> Result<CheckRecord> {
    if let Some(k) = p.x.iter().zip(&p.y).position(|(x, y)| x > y) {
        return Err(RiskError::PreconditionViolated(format!(
            "scenario {k} has x = {} > y = {}",
            p.x[k], p.y[k]
        )));
    }
    let diff = mx(&p.law_x(), copies) - mx(&p.law_y(), copies);
    Ok(CheckRecord::new(
        "A3-monotonicity",
        diff,
        1e-9,
        format!("n={}, scenarios={}", copies.get(), p.len()),
    ))
}

/// (A5) `maxvar_n(lambda X) = lambda maxvar_n(X)` for `lambda > 0`.
pub fn check_positive_homogeneity(
    d: &EmpiricalDistribution,
    copies: CopyCount,
    lambda: f64,
) -> Result<CheckRecord> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(RiskError::out_of_range("homogeneity factor", lambda));
    }
    let base = mx(d, copies);
    let scaled = mx(&d.affine(lambda, 0.0)?, copies);
    Ok(CheckRecord::new(
        "A5-homogeneity",
        (scaled - lambda * base).abs(),
        1e-9 * (lambda * base.abs()).max(1.0),
        format!("lambda={lambda}, n={}, atoms={}", copies.get(), d.len()),
    ))
}

/// `maxvar_n(X + c) = maxvar_n(X) + c`.
pub fn check_translation(
    d: &EmpiricalDistribution,
    copies: CopyCount,
    c: f64,
) -> Result<CheckRecord> {
    let shifted = mx(&d.affine(1.0, c)?, copies);
    Ok(CheckRecord::new(
        "translation",
        (shifted - mx(d, copies) - c).abs(),
        1e-9,
        format!("c={c}, n={}, atoms={}", copies.get(), d.len()),
    ))
}

/// (A6) `maxvar_n(X) > E(X)` for non-constant `X` and `n >= 2`. The
/// violation is the negated margin; the check fails when the margin is at
/// most `1e-12`.
pub fn check_averseness(d: &EmpiricalDistribution, copies: CopyCount) -> Result<CheckRecord> {
    if copies.get() < 2 {
        return Err(RiskError::PreconditionViolated(
            "averseness needs n >= 2".into(),
        ));
    }
    if d.is_constant() {
        return Err(RiskError::PreconditionViolated(
            "averseness needs a non-constant law".into(),
        ));
    }
    let margin = mx(d, copies) - d.expectation();
    let mut r = CheckRecord::new(
        "A6-averseness",
        -margin,
        -1e-12,
        format!("n={}, atoms={}, margin={margin}", copies.get(), d.len()),
    );
    r.passed = margin > 1e-12;
    Ok(r)
}

/// Lipschitz surrogate for closedness: `|maxvar_n(X) - maxvar_n(Y)| <= n E|X - Y|`.
pub fn check_l2_continuity(p: &PairedScenarios, copies: CopyCount) -> CheckRecord {
    let lhs = (mx(&p.law_x(), copies) - mx(&p.law_y(), copies)).abs();
    let rhs = copies.get() as f64 * p.mean_abs_diff();
    CheckRecord::new(
        "A4-surrogate",
        lhs - rhs,
        1e-9,
        format!(
            "n={}, scenarios={}, E|X-Y|={}",
            copies.get(),
            p.len(),
            p.mean_abs_diff()
        ),
    )
}

/// `|maxvar_n(X)| <= n E|X|`.
pub fn check_finite_bound(d: &EmpiricalDistribution, copies: CopyCount) -> CheckRecord {
    let lhs = mx(d, copies).abs();
    let rhs = copies.get() as f64 * d.abs_expectation();
    CheckRecord::new(
        "finite-bound",
        lhs - rhs,
        1e-9,
        format!("n={}, atoms={}", copies.get(), d.len()),
    )
}

/// Cross-route and CVaR identities on one law.
pub fn check_identities(
    d: &EmpiricalDistribution,
    copies: CopyCount,
    level: RiskLevel,
) -> Vec<CheckRecord> {
    let n = copies.get();
    let w = format!("n={n}, alpha={}, atoms={}", level.alpha(), d.len());
    let choquet = mx(d, copies);
    let mut out = vec![
        CheckRecord::new(
            "route-mixture-exact",
            (choquet - maxvar_mixture_exact(d, copies)).abs() / choquet.abs().max(1.0),
            1e-9,
            w.clone(),
        ),
        CheckRecord::new(
            "route-spectral",
            (choquet - maxvar_spectral(d, copies)).abs(),
            1e-12,
            w.clone(),
        ),
    ];
    let cvar = cvar_min(d, level);
    out.push(CheckRecord::new(
        "cvar-min-vs-choquet",
        (cvar.value - cvar_choquet(d, level)).abs(),
        1e-10,
        w.clone(),
    ));
    out.push(CheckRecord::new(
        "var-beta-star",
        (cvar.beta_star - var(d, level)).abs(),
        0.0,
        w.clone(),
    ));
    out.push(CheckRecord::new(
        "cvar-dominance",
        d.expectation() - cvar.value,
        1e-12 * d.abs_expectation().max(1.0),
        w.clone(),
    ));
    let next = mx(d, CopyCount::new(n + 1).expect("n + 1 >= 1"));
    let mut mono = CheckRecord::new("monotone-in-n", choquet - next, 0.0, w.clone());
    if !d.is_constant() {
        mono.passed = next > choquet;
    }
    out.push(mono);
    if d.len() <= 6 && n <= 3 {
        out.push(CheckRecord::new(
            "brute-force",
            (choquet - brute_force_maxvar(d, copies)).abs(),
            1e-12,
            w,
        ));
    }
    out
}

/// Expected maximum by enumerating all `m^n` outcome tuples. Exponential;
/// meant for tiny laws only.
pub fn brute_force_maxvar(d: &EmpiricalDistribution, copies: CopyCount) -> f64 {
    let m = d.len();
    let n = copies.get() as usize;
    let mut idx = vec![0usize; n];
    let mut terms = Vec::with_capacity(m.pow(n as u32));
    loop {
        let mut p = 1.0;
        let mut best = f64::NEG_INFINITY;
        for &i in &idx {
            p *= d.probs()[i];
            best = best.max(d.values()[i]);
        }
        terms.push(p * best);
        let mut pos = 0;
        loop {
            if pos == n {
                return compensated_sum(terms);
            }
            idx[pos] += 1;
            if idx[pos] < m {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Duality checks: the extremal density is tight and attains MAXVAR, and a
/// random mixture density is in the envelope and gives a nonnegative gap.
pub fn check_duality(
    d: &EmpiricalDistribution,
    copies: CopyCount,
    s: &mut SeededSampler,
) -> Result<Vec<CheckRecord>> {
    let n = copies.get() as f64;
    let w = format!("n={}, atoms={}", copies.get(), d.len());
    let e = extremal_density(d, copies);
    let report = core_check(d, copies, &e)?;
    // Tightness on every upper-level set, up to sets merged by ties.
    let tight_worst = report
        .upper_sets
        .iter()
        .map(|u| u.excess().abs())
        .fold(0.0, f64::max);
    let mut out = vec![
        CheckRecord::new(
            "dual-core-tight",
            tight_worst.max(report.max_violation),
            CORE_TOL,
            w.clone(),
        ),
        CheckRecord::new(
            "dual-extremal-bounds",
            (e.max() - n).max(-e.min()).max((e.mean(d) - 1.0).abs()),
            1e-9,
            w.clone(),
        ),
        CheckRecord::new(
            "dual-strong",
            dual_gap(d, copies, &e)?.abs(),
            1e-10,
            w.clone(),
        ),
    ];
    let family = generate::random_family(s, d);
    let q = mixture_density(d, copies, &family)?;
    out.push(CheckRecord::new(
        "dual-mixture-bounds",
        (q.max() - n).max(-q.min()).max((q.mean(d) - 1.0).abs()),
        1e-9,
        format!("{w}, segments={}", family.densities().len()),
    ));
    let mixture_report = core_check(d, copies, &q)?;
    out.push(CheckRecord::new(
        "dual-mixture-core",
        mixture_report.max_violation,
        CORE_TOL,
        w.clone(),
    ));
    out.push(CheckRecord::new(
        "dual-weak",
        q.pairing(d) - mx(d, copies),
        1e-9,
        format!("{w}, segments={}", family.densities().len()),
    ));
    Ok(out)
}

/// All checks on one randomized instance, drawn from stream `trial` of `seed`.
pub fn run_trial(seed: u64, trial: u64) -> Result<Vec<CheckRecord>> {
    let mut s = SeededSampler::new(seed, trial);
    let copies = CopyCount::new(s.int_in(1, 10) as u32)?;
    let d = generate::random_suite_distribution(&mut s, 1000);
    let tag = format!("trial {trial}");
    let mut out = Vec::new();

    let c = generate::random_distribution(&mut s, 1).values()[0];
    out.push(check_constant(copies, c)?);

    let pair = generate::random_pair(&mut s, 1000);
    out.push(check_subadditivity(&pair, copies));
    for lambda in [0.25, 0.5, 0.75] {
        out.push(check_convexity(&pair, copies, lambda)?);
    }

    let ordered = generate::random_ordered_pair(&mut s, 1000);
    out.push(check_monotonicity(&ordered, copies)?);

    let lambda = s.uniform_in(0.01, 10.0);
    out.push(check_positive_homogeneity(&d, copies, lambda)?);
    let shift = s.uniform_in(-100.0, 100.0);
    out.push(check_translation(&d, copies, shift)?);

    let perturbed = generate::random_perturbation(&mut s, &d);
    out.push(check_l2_continuity(&perturbed, copies));
    out.push(check_finite_bound(&d, copies));

    if !d.is_constant() {
        let averse_n = CopyCount::new(copies.get().max(2))?;
        out.push(check_averseness(&d, averse_n)?);
    }

    let alpha = match s.int_in(0, 4) {
        0 => 0.0,
        1 => 0.5,
        2 => 0.99,
        3 => 0.999,
        _ => s.next_uniform(),
    };
    out.extend(check_identities(&d, copies, RiskLevel::new(alpha)?));
    out.extend(check_duality(&d, copies, &mut s)?);

    Ok(out.into_iter().map(|r| r.with_witness(&tag)).collect())
}

/// Runs `trials` randomized instances. Trial `t` reads stream `t` of `seed`,
/// and results merge in trial order, so the report depends only on
/// `(seed, trials)`.
pub fn run_suite(seed: u64, trials: u64) -> Result<VerificationReport> {
    if trials < 1 {
        return Err(RiskError::BudgetTooSmall(
            "verification needs at least 1 trial".into(),
        ));
    }
    let per_trial: Vec<Vec<CheckRecord>> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(seed, t))
        .collect::<Result<_>>()?;
    Ok(VerificationReport::from_records(
        seed,
        trials,
        per_trial.into_iter().flatten(),
    ))
}
