//! VaR, CVaR and the MAXVAR / MINVAR risk measures on empirical laws.
//!
//! MAXVAR of order `n` is the expected maximum of `n` i.i.d. copies. It is
//! computed here by several independent routes that are cross-checked in the
//! test suites:
//!
//! * [`maxvar_choquet`]: Choquet integral of the survival function under the
//!   distortion `h(x) = 1 - (1 - x)^n`, summed over atom gaps;
//! * [`maxvar_spectral`]: quantile-weighted sum with spectrum `n u^(n-1)`;
//! * [`maxvar_mixture_exact`]: closed-form integral of `CVaR_a * w_n(a)` over `a`;
//! * [`maxvar_mixture_quad`]: composite Gauss-Legendre version of the same integral;
//! * [`maxvar_mc`]: seeded Monte Carlo over the defining expectation.

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::EmpiricalDistribution;
use crate::error::{Result, RiskError};
use crate::numeric::{compensated_sum, pow_diff, CompensatedSum};
use crate::quadrature::{snapped_panels, GaussLegendre};
use crate::sampler::SeededSampler;

/// Confidence level `alpha` in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct RiskLevel(f64);

impl RiskLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_nan() || !(0.0..1.0).contains(&alpha) {
            return Err(RiskError::out_of_range("risk level alpha", alpha));
        }
        Ok(Self(alpha))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }

    /// `1 - alpha`, the tail probability.
    pub fn tail(self) -> f64 {
        1.0 - self.0
    }
}

/// Number of i.i.d. copies, `n >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CopyCount(u32);

impl CopyCount {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(RiskError::out_of_range("copy count", 0.0));
        }
        Ok(Self(n))
    }

    /// Accepts a real only if it is a positive integer.
    pub fn from_real(n: f64) -> Result<Self> {
        if !n.is_finite() || n.fract() != 0.0 || n < 1.0 || n > u32::MAX as f64 {
            return Err(RiskError::NonIntegerCopies(n));
        }
        Self::new(n as u32)
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvarResult {
    pub value: f64,
    /// Minimizer of the Rockafellar-Uryasev objective; equals [`var`].
    pub beta_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Composite Gauss-Legendre rule description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadratureRule {
    panels: usize,
    points_per_panel: usize,
}

impl QuadratureRule {
    pub fn new(panels: usize, points_per_panel: usize) -> Result<Self> {
        if panels < 1 {
            return Err(RiskError::out_of_range("panels", panels as f64));
        }
        if !(2..=64).contains(&points_per_panel) {
            return Err(RiskError::out_of_range(
                "points per panel",
                points_per_panel as f64,
            ));
        }
        Ok(Self {
            panels,
            points_per_panel,
        })
    }

    /// One panel per breakpoint interval of `d`.
    pub fn snapped_to(d: &EmpiricalDistribution, points_per_panel: usize) -> Result<Self> {
        Self::new(d.len(), points_per_panel)
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn points_per_panel(&self) -> usize {
        self.points_per_panel
    }
}

// ---------------------------------------------------------------------------
// VaR and CVaR
// ---------------------------------------------------------------------------

/// `inf { v : P(X > v) < 1 - alpha }`, attained at an atom.
///
/// The strict inequality gives the upper quantile: on `uniform{1,2,3,4}` at
/// `alpha = 0.5` this is 3, not 2.
pub fn var(d: &EmpiricalDistribution, level: RiskLevel) -> f64 {
    d.values()[var_index(d, level)]
}

fn var_index(d: &EmpiricalDistribution, level: RiskLevel) -> usize {
    let tail = level.tail();
    // gt_prob = 1 - F_k is nonincreasing in k and 0 at the last atom.
    d.cumulative().partition_point(|&f| 1.0 - f >= tail)
}

/// `E(X - v_k)_+` for every atom, by the backward recurrence
/// `tau_k = tau_{k+1} + P(X > v_k) (v_{k+1} - v_k)`.
pub fn tail_expectations(d: &EmpiricalDistribution) -> Vec<f64> {
    let values = d.values();
    let cum = d.cumulative();
    let m = values.len();
    let mut tau = vec![0.0; m];
    let mut acc = CompensatedSum::new();
    for k in (0..m.saturating_sub(1)).rev() {
        acc.add((1.0 - cum[k]) * (values[k + 1] - values[k]));
        tau[k] = acc.value();
    }
    tau
}

/// `min_b { b + E(X - b)_+ / (1 - alpha) }`. The objective is piecewise
/// linear and convex with kinks at the atoms, so the minimum is taken over
/// the atoms.
pub fn cvar_min(d: &EmpiricalDistribution, level: RiskLevel) -> CvarResult {
    let tail = level.tail();
    let tau = tail_expectations(d);
    let value = d
        .values()
        .iter()
        .zip(&tau)
        .map(|(&v, &t)| v + t / tail)
        .fold(f64::INFINITY, f64::min);
    CvarResult {
        value,
        beta_star: var(d, level),
    }
}

/// CVaR as the Choquet integral of `X` against the capacity `g_alpha o P`.
pub fn cvar_choquet(d: &EmpiricalDistribution, level: RiskLevel) -> f64 {
    choquet_integral(d, |survival| g_alpha_unchecked(level, survival))
}

/// `int_{-inf}^0 [c(P(X>t)) - 1] dt + int_0^inf c(P(X>t)) dt` for a
/// distortion `c` with `c(1) = 1`. The survival function is constant on
/// each atom gap, so the integral collapses to
/// `v_1 + sum_k (v_{k+1} - v_k) c(P(X > v_k))`.
fn choquet_integral<C: Fn(f64) -> f64>(d: &EmpiricalDistribution, distortion: C) -> f64 {
    let values = d.values();
    let cum = d.cumulative();
    let mut acc = CompensatedSum::new();
    acc.add(values[0]);
    for k in 0..values.len() - 1 {
        acc.add((values[k + 1] - values[k]) * distortion(1.0 - cum[k]));
    }
    acc.value()
}

/// Distortion of CVaR: `x / (1 - alpha)` below `1 - alpha`, then 1.
pub fn g_alpha(level: RiskLevel, x: f64) -> Result<f64> {
    check_unit("distortion argument", x)?;
    Ok(g_alpha_unchecked(level, x))
}

fn g_alpha_unchecked(level: RiskLevel, x: f64) -> f64 {
    let tail = level.tail();
    if x < tail {
        x / tail
    } else {
        1.0
    }
}

/// Prepared CVaR evaluator for many levels on one law. Groups the Choquet
/// sum into the saturated part (`g = 1`) and the linear part, keeping suffix
/// sums of `gap_k * P(X > v_k)`; each evaluation is a binary search.
#[derive(Debug, Clone)]
pub struct CvarCurve<'a> {
    dist: &'a EmpiricalDistribution,
    survival: Vec<f64>,
    suffix: Vec<f64>,
}

impl<'a> CvarCurve<'a> {
    pub fn new(dist: &'a EmpiricalDistribution) -> Self {
        let values = dist.values();
        let survival: Vec<f64> = dist.cumulative().iter().map(|&f| 1.0 - f).collect();
        let m = values.len();
        let mut suffix = vec![0.0; m];
        let mut acc = CompensatedSum::new();
        for k in (0..m - 1).rev() {
            acc.add((values[k + 1] - values[k]) * survival[k]);
            suffix[k] = acc.value();
        }
        Self {
            dist,
            survival,
            suffix,
        }
    }

    pub fn eval(&self, level: RiskLevel) -> f64 {
        let tail = level.tail();
        // First gap whose survival falls in g's linear branch.
        let k = self.survival.partition_point(|&s| s >= tail);
        self.dist.values()[k] + self.suffix[k] / tail
    }
}

// ---------------------------------------------------------------------------
// Weight and distortion of MAXVAR
// ---------------------------------------------------------------------------

/// `w_n(a) = n (n-1) (1-a) a^(n-2)` with `0^0 = 1`.
///
/// For `n = 1` the mixing law is a point mass at `a = 0` and has no density;
/// this returns 0 and the mixture routes special-case `n = 1`.
pub fn weight(copies: CopyCount, alpha: f64) -> Result<f64> {
    check_unit("weight argument", alpha)?;
    Ok(weight_unchecked(copies, alpha))
}

fn weight_unchecked(copies: CopyCount, alpha: f64) -> f64 {
    let n = copies.get();
    if n == 1 {
        return 0.0;
    }
    let nf = n as f64;
    // powi(0) is exactly 1, including 0^0.
    nf * (nf - 1.0) * (1.0 - alpha) * alpha.powi(n as i32 - 2)
}

/// `int_a^b w_n`, closed form `[n x^(n-1) - (n-1) x^n]_a^b`.
/// For `n = 1` the whole unit mass sits at `alpha = 0`.
pub fn weight_mass(copies: CopyCount, a: f64, b: f64) -> f64 {
    let n = copies.get();
    if n == 1 {
        return if a <= 0.0 && b > 0.0 { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    nf * pow_diff(b, a, n - 1) - (nf - 1.0) * pow_diff(b, a, n)
}

/// `int_a^b w_n(x) / (1 - x) dx = n (b^(n-1) - a^(n-1))`.
pub fn tail_weight_mass(copies: CopyCount, a: f64, b: f64) -> f64 {
    let n = copies.get();
    if n == 1 {
        return weight_mass(copies, a, b);
    }
    n as f64 * pow_diff(b, a, n - 1)
}

/// `h(x) = 1 - (1 - x)^n`.
pub fn distortion_h(copies: CopyCount, x: f64) -> Result<f64> {
    check_unit("distortion argument", x)?;
    Ok(1.0 - (1.0 - x).powi(copies.get() as i32))
}

/// `int_0^1 g_a(x) w_n(a) da` integrated piece by piece: `g_a(x) = x / (1-a)`
/// for `a < 1 - x` and 1 above.
pub fn distortion_from_mixture(copies: CopyCount, x: f64) -> Result<f64> {
    check_unit("distortion argument", x)?;
    let knee = 1.0 - x;
    Ok(x * tail_weight_mass(copies, 0.0, knee) + weight_mass(copies, knee, 1.0))
}

// ---------------------------------------------------------------------------
// MAXVAR routes
// ---------------------------------------------------------------------------

/// Choquet integral of the survival function under `h`. Uses
/// `h(P(X > t)) = 1 - P(X <= t)^n`, reading `P(X <= t)` directly.
pub fn maxvar_choquet(d: &EmpiricalDistribution, copies: CopyCount) -> f64 {
    let n = copies.get() as i32;
    choquet_integral(d, |survival| 1.0 - (1.0 - survival).powi(n))
}

/// `int_0^1 q(u) n u^(n-1) du` where `q` is the quantile function. On each
/// quantile level interval `(F_{k-1}, F_k]` the quantile is constant, so the
/// spectrum contributes `F_k^n - F_{k-1}^n`.
pub fn maxvar_spectral(d: &EmpiricalDistribution, copies: CopyCount) -> f64 {
    let n = copies.get();
    let mut acc = CompensatedSum::new();
    let mut prev = 0.0;
    for &f in d.cumulative() {
        let level_value = d.quantile_unchecked(f);
        acc.add(level_value * pow_diff(f, prev, n));
        prev = f;
    }
    acc.value()
}

/// Exact `int_0^1 CVaR_a(X) w_n(a) da`.
///
/// On `a in [F_{k-1}, F_k)` the VaR is the atom `v_k`, so
/// `w_n(a) CVaR_a = n(n-1) a^(n-2) [(1-a) v_k + tau_k]` with
/// `tau_k = E(X - v_k)_+`. That polynomial is integrated in closed form.
pub fn maxvar_mixture_exact(d: &EmpiricalDistribution, copies: CopyCount) -> f64 {
    if copies.get() == 1 {
        return d.expectation();
    }
    let tau = tail_expectations(d);
    let mut acc = CompensatedSum::new();
    let mut prev = 0.0;
    for ((&v, &t), &f) in d.values().iter().zip(&tau).zip(d.cumulative()) {
        acc.add(v * weight_mass(copies, prev, f));
        acc.add(t * tail_weight_mass(copies, prev, f));
        prev = f;
    }
    acc.value()
}

/// Composite Gauss-Legendre approximation of `int_0^1 CVaR_a(X) w_n(a) da`.
/// Panel edges include every cumulative probability of `d`, where the CVaR
/// profile has kinks.
pub fn maxvar_mixture_quad(
    d: &EmpiricalDistribution,
    copies: CopyCount,
    rule: QuadratureRule,
) -> Result<f64> {
    let interior = &d.cumulative()[..d.len() - 1];
    let panels = snapped_panels(0.0, 1.0, interior, rule.panels())?;
    if copies.get() == 1 {
        return Ok(d.expectation());
    }
    let gl = GaussLegendre::new(rule.points_per_panel())?;
    let curve = CvarCurve::new(d);
    // Gauss nodes are interior, so every evaluation point is below 1.
    let integrand = |a: f64| curve.eval(RiskLevel(a)) * weight_unchecked(copies, a);
    Ok(compensated_sum(
        panels
            .iter()
            .map(|&(lo, hi)| gl.integrate(lo, hi, integrand)),
    ))
}

/// Trials per independently seeded block of the Monte Carlo estimator.
const MC_BLOCK: u64 = 1 << 15;

/// Monte Carlo estimate of `E max(X_1, ..., X_n)`.
///
/// Trial `t` uses draws `t*n .. (t+1)*n` of the sampler's stream, counted
/// from its current position; the sampler is advanced past them. Blocks of
/// trials run in parallel and are merged in block order, so the result does
/// not depend on the number of worker threads.
pub fn maxvar_mc(
    d: &EmpiricalDistribution,
    copies: CopyCount,
    trials: u64,
    sampler: &mut SeededSampler,
) -> Result<McEstimate> {
    if trials < 2 {
        return Err(RiskError::BudgetTooSmall(format!(
            "{trials} Monte Carlo trials, need at least 2"
        )));
    }
    let n = copies.get() as u64;
    let start = sampler.position();
    let blocks = trials.div_ceil(MC_BLOCK);
    let partials: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let first = b * MC_BLOCK;
            let count = MC_BLOCK.min(trials - first);
            let mut s = sampler.at(start + first * n);
            let mut m = Moments::default();
            for _ in 0..count {
                // The quantile is nondecreasing, so the largest of the n
                // draws is the one made from the largest uniform.
                let mut u_max = 0.0f64;
                for _ in 0..n {
                    u_max = u_max.max(s.next_uniform());
                }
                m.push(d.quantile_unchecked(u_max));
            }
            m
        })
        .collect();
    let total = partials
        .into_iter()
        .fold(Moments::default(), |acc, m| acc.merge(&m));
    sampler.seek(start + trials * n);

    let variance = total.m2 / (total.count - 1.0);
    Ok(McEstimate {
        estimate: total.mean,
        std_error: (variance / total.count).sqrt(),
        trials,
        seed: sampler.seed(),
    })
}

/// Running mean and centered second moment (Welford), mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0.0 {
            return *other;
        }
        if other.count == 0.0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }
}

/// Expected minimum of `n` copies, `-maxvar_n(-X)`.
pub fn minvar(d: &EmpiricalDistribution, copies: CopyCount) -> f64 {
    let negated = d
        .affine(-1.0, 0.0)
        .expect("negation of a finite law is finite");
    -maxvar_choquet(&negated, copies)
}

fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if x.is_nan() || !(0.0..=1.0).contains(&x) {
        return Err(RiskError::out_of_range(what, x));
    }
    Ok(())
}
