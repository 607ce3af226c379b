//! Dual side of MAXVAR: envelope densities, membership checks and duality gaps.
//!
//! MAXVAR is the supremum of `E(XQ)` over its risk envelope. The envelope is
//! generated by mixing, over `alpha`, densities `Q_alpha` feasible for
//! `CVaR_alpha` (`0 <= Q_alpha <= 1/(1-alpha)`, `E(Q_alpha) = 1`) with the
//! weight `w_n`. On a finite law this module builds such mixtures exactly,
//! constructs the maximizing density, and tests membership against the
//! distortion capacity `A -> h(P(A))`.

use serde::Serialize;

use crate::dist::EmpiricalDistribution;
use crate::error::{Result, RiskError};
use crate::measures::{
    cvar_min, maxvar_choquet, tail_weight_mass, weight_mass, CopyCount, RiskLevel,
};
use crate::numeric::{compensated_sum, pow_diff, CompensatedSum};

/// Tolerance for tight / violated capacity constraints.
pub const CORE_TOL: f64 = 1e-9;
/// Tolerance for box and unit-mean constraints on densities.
pub const FEAS_TOL: f64 = 1e-12;

/// Nonnegative density on the atoms of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeDensity {
    q: Vec<f64>,
}

impl EnvelopeDensity {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(RiskError::EmptyInput);
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(RiskError::NonFiniteValue("density"));
        }
        Ok(Self { q })
    }

    /// The density of the expectation, `Q = 1`.
    pub fn ones(len: usize) -> Self {
        Self { q: vec![1.0; len] }
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn check_dims(&self, d: &EmpiricalDistribution) -> Result<()> {
        if self.q.len() != d.len() {
            return Err(RiskError::DimensionMismatch {
                expected: d.len(),
                actual: self.q.len(),
            });
        }
        Ok(())
    }

    /// `E(Q)` under `d`.
    pub fn mean(&self, d: &EmpiricalDistribution) -> f64 {
        compensated_sum(self.q.iter().zip(d.probs()).map(|(q, p)| q * p))
    }

    /// `E(XQ)` under `d`.
    pub fn pairing(&self, d: &EmpiricalDistribution) -> f64 {
        compensated_sum(d.atoms().zip(&self.q).map(|((v, p), q)| v * q * p))
    }

    pub fn max(&self) -> f64 {
        self.q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.q.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// The maximizer of `E(XQ)` over the MAXVAR envelope:
/// `q_k = (F_k^n - F_{k-1}^n) / p_k`.
pub fn extremal_density(d: &EmpiricalDistribution, copies: CopyCount) -> EnvelopeDensity {
    let n = copies.get();
    let mut prev = 0.0;
    let q = d
        .cumulative()
        .iter()
        .zip(d.probs())
        .map(|(&f, &p)| {
            let q = pow_diff(f, prev, n) / p;
            prev = f;
            q
        })
        .collect();
    EnvelopeDensity { q }
}

/// The maximizer of `E(XQ)` over the CVaR envelope at `level`: `1/(1-alpha)`
/// strictly above the VaR atom, the remaining mass on the VaR atom, 0 below.
pub fn cvar_extremal_density(d: &EmpiricalDistribution, level: RiskLevel) -> EnvelopeDensity {
    let tail = level.tail();
    let cum = d.cumulative();
    let k = cum.partition_point(|&f| 1.0 - f >= tail);
    let q = (0..d.len())
        .map(|j| match j.cmp(&k) {
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => (tail - (1.0 - cum[k])) / (tail * d.probs()[k]),
            std::cmp::Ordering::Greater => 1.0 / tail,
        })
        .collect();
    EnvelopeDensity { q }
}

// ---------------------------------------------------------------------------
// Membership against the distortion capacity
// ---------------------------------------------------------------------------

/// One upper-level set `{Q >= threshold}` and its capacity constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperSet {
    pub threshold: f64,
    /// Number of atoms; the members are the first `size` entries of
    /// [`CoreReport::order`].
    pub size: usize,
    pub prob: f64,
    /// `E(Q 1_A)`.
    pub mass: f64,
    /// `h(P(A))`.
    pub capacity: f64,
}

impl UpperSet {
    pub fn excess(&self) -> f64 {
        self.mass - self.capacity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoreReport {
    /// Largest of: capacity excess over all upper-level sets, `|E(Q) - 1|`,
    /// and the negative part of `min Q`.
    pub max_violation: f64,
    pub mean_error: f64,
    pub min_q: f64,
    /// Atom indices sorted by decreasing `q` (ties by index).
    pub order: Vec<usize>,
    pub upper_sets: Vec<UpperSet>,
}

impl CoreReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }

    /// Upper-level sets whose constraint holds with equality within `tol`.
    pub fn tight_sets(&self, tol: f64) -> impl Iterator<Item = &UpperSet> {
        self.upper_sets
            .iter()
            .filter(move |s| s.excess().abs() <= tol)
    }

    pub fn worst_set(&self) -> Option<&UpperSet> {
        self.upper_sets
            .iter()
            .max_by(|a, b| a.excess().total_cmp(&b.excess()))
    }

    pub fn members(&self, set: &UpperSet) -> &[usize] {
        &self.order[..set.size]
    }
}

/// Checks `E(Q 1_A) <= h(P(A))` for every set `A`.
///
/// For a fixed `P(A)` the left side is largest when `A` collects the atoms
/// with the largest `q`; between consecutive upper-level sets that bound is
/// linear in `P(A)` while `h` is concave, so the excess over any set is at
/// most the excess at one of the upper-level sets `{Q >= t}`. Atoms with
/// equal `q` enter together.
pub fn core_check(
    d: &EmpiricalDistribution,
    copies: CopyCount,
    e: &EnvelopeDensity,
) -> Result<CoreReport> {
    e.check_dims(d)?;
    let q = e.q();
    let probs = d.probs();
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| q[b].total_cmp(&q[a]).then(a.cmp(&b)));

    let n = copies.get() as i32;
    let mut upper_sets = Vec::new();
    let mut mass = CompensatedSum::new();
    let mut prob = CompensatedSum::new();
    for (pos, &k) in order.iter().enumerate() {
        mass.add(q[k] * probs[k]);
        prob.add(probs[k]);
        let group_ends = order.get(pos + 1).is_none_or(|&next| q[next] != q[k]);
        if group_ends {
            let p = prob.value().min(1.0);
            upper_sets.push(UpperSet {
                threshold: q[k],
                size: pos + 1,
                prob: p,
                mass: mass.value(),
                capacity: 1.0 - (1.0 - p).powi(n),
            });
        }
    }

    let mean_error = (e.mean(d) - 1.0).abs();
    let min_q = e.min();
    let worst_excess = upper_sets
        .iter()
        .map(UpperSet::excess)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_violation = worst_excess.max(mean_error).max(-min_q);
    Ok(CoreReport {
        max_violation,
        mean_error,
        min_q,
        order,
        upper_sets,
    })
}

/// `maxvar_n(d) - E(XQ)`. Requires `Q` to pass [`core_check`].
pub fn dual_gap(d: &EmpiricalDistribution, copies: CopyCount, e: &EnvelopeDensity) -> Result<f64> {
    let report = core_check(d, copies, e)?;
    if !report.passes(CORE_TOL) {
        return Err(RiskError::NotInEnvelope {
            excess: report.max_violation,
        });
    }
    Ok(maxvar_choquet(d, copies) - e.pairing(d))
}

// ---------------------------------------------------------------------------
// Continuous mixtures over alpha
// ---------------------------------------------------------------------------

/// `Q_alpha = base + tail / (1 - alpha)` on one alpha-segment.
///
/// `tail = 0` gives a density constant in alpha. The `1/(1-alpha)` term is
/// what the per-level CVaR maximizers need; both pieces integrate against
/// `w_n` in closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentDensity {
    pub base: Vec<f64>,
    pub tail: Vec<f64>,
}

impl SegmentDensity {
    pub fn constant(q: Vec<f64>) -> Self {
        let tail = vec![0.0; q.len()];
        Self { base: q, tail }
    }

    fn len(&self) -> usize {
        self.base.len()
    }
}

/// Densities feasible for CVaR at every level, piecewise in alpha over
/// `breakpoints` (`0 = b_0 < b_1 < ... < b_J = 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvarFeasibleFamily {
    breakpoints: Vec<f64>,
    densities: Vec<SegmentDensity>,
}

impl CvarFeasibleFamily {
    pub fn new(breakpoints: Vec<f64>, densities: Vec<SegmentDensity>) -> Result<Self> {
        let ok_ends = breakpoints.first() == Some(&0.0) && breakpoints.last() == Some(&1.0);
        if !ok_ends || !breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(RiskError::InfeasibleFamily(
                "breakpoints must increase strictly from 0 to 1".into(),
            ));
        }
        if densities.len() + 1 != breakpoints.len() {
            return Err(RiskError::InfeasibleFamily(format!(
                "{} segments but {} densities",
                breakpoints.len() - 1,
                densities.len()
            )));
        }
        for s in &densities {
            if s.tail.len() != s.base.len() {
                return Err(RiskError::InfeasibleFamily("ragged segment density".into()));
            }
        }
        Ok(Self {
            breakpoints,
            densities,
        })
    }

    /// Piecewise-constant family: `densities[j]` applies on `[b_j, b_{j+1})`.
    pub fn piecewise_constant(
        breakpoints: Vec<f64>,
        densities: Vec<EnvelopeDensity>,
    ) -> Result<Self> {
        let segs = densities
            .into_iter()
            .map(|e| SegmentDensity::constant(e.q))
            .collect();
        Self::new(breakpoints, segs)
    }

    /// The per-level CVaR maximizers of `d`, written segment by segment over
    /// the cumulative probabilities of `d` (where the VaR atom changes).
    pub fn cvar_extremal(d: &EmpiricalDistribution) -> Self {
        let m = d.len();
        let cum = d.cumulative();
        let probs = d.probs();
        let mut breakpoints = vec![0.0];
        breakpoints.extend_from_slice(&cum[..m - 1]);
        breakpoints.push(1.0);
        let mut densities = Vec::with_capacity(m);
        for k in 0..m {
            let mut base = vec![0.0; m];
            let mut tail = vec![0.0; m];
            base[k] = 1.0 / probs[k];
            tail[k] = -(1.0 - cum[k]) / probs[k];
            for t in tail.iter_mut().skip(k + 1) {
                *t = 1.0;
            }
            densities.push(SegmentDensity { base, tail });
        }
        Self {
            breakpoints,
            densities,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn densities(&self) -> &[SegmentDensity] {
        &self.densities
    }

    /// Checks every segment against `d`: `0 <= (1-a) Q_a <= 1` at both ends
    /// of the segment (it is affine in `a`), `E(base) = 1` and `E(tail) = 0`.
    pub fn validate(&self, d: &EmpiricalDistribution) -> Result<()> {
        let probs = d.probs();
        for (j, seg) in self.densities.iter().enumerate() {
            if seg.len() != d.len() {
                return Err(RiskError::DimensionMismatch {
                    expected: d.len(),
                    actual: seg.len(),
                });
            }
            let (a, b) = (self.breakpoints[j], self.breakpoints[j + 1]);
            for (k, (&c, &t)) in seg.base.iter().zip(&seg.tail).enumerate() {
                for alpha in [a, b] {
                    let scaled = c * (1.0 - alpha) + t;
                    let tol = FEAS_TOL * (c.abs() * (1.0 - alpha) + t.abs()).max(1.0);
                    if scaled < -tol || scaled > 1.0 + tol {
                        return Err(RiskError::InfeasibleFamily(format!(
                            "segment {j} atom {k}: (1-a)Q_a = {scaled} at a = {alpha}"
                        )));
                    }
                }
            }
            let base_mean = compensated_sum(seg.base.iter().zip(probs).map(|(c, p)| c * p));
            let tail_mean = compensated_sum(seg.tail.iter().zip(probs).map(|(t, p)| t * p));
            let scale =
                compensated_sum(seg.base.iter().zip(probs).map(|(c, p)| c.abs() * p)).max(1.0);
            if (base_mean - 1.0).abs() > FEAS_TOL * scale || tail_mean.abs() > FEAS_TOL * scale {
                return Err(RiskError::InfeasibleFamily(format!(
                    "segment {j}: E(Q_a) != 1 (base mean {base_mean}, tail mean {tail_mean})"
                )));
            }
        }
        Ok(())
    }
}

/// `int_0^1 Q_a w_n(a) da` for a feasible family, per atom, with the weight
/// integrals in closed form.
pub fn mixture_density(
    d: &EmpiricalDistribution,
    copies: CopyCount,
    family: &CvarFeasibleFamily,
) -> Result<EnvelopeDensity> {
    family.validate(d)?;
    let m = d.len();
    let mut acc = vec![CompensatedSum::new(); m];
    for (j, seg) in family.densities.iter().enumerate() {
        let (a, b) = (family.breakpoints[j], family.breakpoints[j + 1]);
        let flat = weight_mass(copies, a, b);
        let tilted = tail_weight_mass(copies, a, b);
        for ((sum, &base), &tail) in acc.iter_mut().zip(&seg.base).zip(&seg.tail) {
            sum.add(base * flat);
            sum.add(tail * tilted);
        }
    }
    let q: Vec<f64> = acc.iter().map(CompensatedSum::value).collect();
    let out = EnvelopeDensity { q };
    let n = copies.get() as f64;
    let bound_tol = 1e-9 * n;
    if out.min() < -bound_tol || out.max() > n + bound_tol {
        return Err(RiskError::InfeasibleFamily(format!(
            "mixture density leaves [0, n]: min {}, max {}",
            out.min(),
            out.max()
        )));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Discrete mixtures of CVaR
// ---------------------------------------------------------------------------

/// Weights `lambda_i > 0` summing to 1 over levels `alpha_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMixtureSpec {
    levels: Vec<(f64, RiskLevel)>,
}

impl DiscreteMixtureSpec {
    pub fn new(levels: Vec<(f64, RiskLevel)>) -> Result<Self> {
        if levels.is_empty() {
            return Err(RiskError::EmptyInput);
        }
        for &(lambda, _) in &levels {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(RiskError::out_of_range("mixture weight", lambda));
            }
        }
        let total = compensated_sum(levels.iter().map(|l| l.0));
        if (total - 1.0).abs() > FEAS_TOL {
            return Err(RiskError::out_of_range("mixture weight total", total));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[(f64, RiskLevel)] {
        &self.levels
    }

    /// `sum_i lambda_i CVaR_{alpha_i}(d)`.
    pub fn risk(&self, d: &EmpiricalDistribution) -> f64 {
        compensated_sum(self.levels.iter().map(|&(l, a)| l * cvar_min(d, a).value))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteEnvelope {
    pub density: EnvelopeDensity,
    /// `E(X sum_i lambda_i Q_i)`.
    pub value: f64,
    /// `sum_i lambda_i CVaR_{alpha_i}(X)`.
    pub bound: f64,
}

impl DiscreteEnvelope {
    pub fn gap(&self) -> f64 {
        self.bound - self.value
    }
}

/// Forms `sum_i lambda_i Q_i` from CVaR-feasible parts and verifies
/// `E(X sum lambda_i Q_i) <= sum lambda_i CVaR_{alpha_i}(X)`.
pub fn discrete_envelope_check(
    d: &EmpiricalDistribution,
    spec: &DiscreteMixtureSpec,
    parts: &[EnvelopeDensity],
) -> Result<DiscreteEnvelope> {
    if parts.len() != spec.levels.len() {
        return Err(RiskError::DimensionMismatch {
            expected: spec.levels.len(),
            actual: parts.len(),
        });
    }
    let m = d.len();
    let mut acc = vec![CompensatedSum::new(); m];
    for (index, (part, &(lambda, level))) in parts.iter().zip(&spec.levels).enumerate() {
        part.check_dims(d)?;
        let cap = 1.0 / level.tail();
        if part.min() < -FEAS_TOL || part.max() > cap * (1.0 + FEAS_TOL) {
            return Err(RiskError::InfeasiblePart {
                index,
                reason: format!("values must lie in [0, {cap}]"),
            });
        }
        let mean = part.mean(d);
        if (mean - 1.0).abs() > FEAS_TOL {
            return Err(RiskError::InfeasiblePart {
                index,
                reason: format!("E(Q) = {mean}"),
            });
        }
        for (a, &q) in acc.iter_mut().zip(part.q()) {
            a.add(lambda * q);
        }
    }
    let density = EnvelopeDensity {
        q: acc.iter().map(CompensatedSum::value).collect(),
    };
    let value = density.pairing(d);
    let bound = spec.risk(d);
    if value > bound + CORE_TOL {
        return Err(RiskError::PreconditionViolated(format!(
            "E(XQ) = {value} exceeds the mixed CVaR bound {bound}"
        )));
    }
    Ok(DiscreteEnvelope {
        density,
        value,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::cvar_min;

    fn d4() -> EmpiricalDistribution {
        EmpiricalDistribution::uniform(&[1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    fn cc(n: u32) -> CopyCount {
        CopyCount::new(n).unwrap()
    }

    fn lvl(a: f64) -> RiskLevel {
        RiskLevel::new(a).unwrap()
    }

    #[test]
    fn extremal_density_examples() {
        let d = d4();
        let e = extremal_density(&d, cc(2));
        assert_eq!(e.q(), &[0.25, 0.75, 1.25, 1.75]);
        assert_eq!(e.mean(&d), 1.0);
        assert_eq!(e.pairing(&d), 3.125);

        let c = EmpiricalDistribution::constant(9.0).unwrap();
        assert_eq!(extremal_density(&c, cc(4)).q(), &[1.0]);
        assert!(extremal_density(&d, cc(1)).q().iter().all(|&q| q == 1.0));
    }

    #[test]
    fn core_check_extremal_is_tight_everywhere() {
        let d = d4();
        let r = core_check(&d, cc(2), &extremal_density(&d, cc(2))).unwrap();
        assert!(r.max_violation.abs() <= 1e-12);
        let tight: Vec<Vec<usize>> = r
            .tight_sets(CORE_TOL)
            .map(|s| r.members(s).to_vec())
            .collect();
        assert_eq!(
            tight,
            vec![vec![3], vec![3, 2], vec![3, 2, 1], vec![3, 2, 1, 0]]
        );
        // h(0.25) = 2(0.25) - 0.25^2
        assert_eq!(r.upper_sets[0].mass, 0.4375);
        assert_eq!(r.upper_sets[0].capacity, 0.4375);
    }

    #[test]
    fn core_check_ones_and_violation() {
        let d = d4();
        let ones = core_check(&d, cc(2), &EnvelopeDensity::ones(4)).unwrap();
        assert!(ones.passes(CORE_TOL));
        assert_eq!(ones.upper_sets.len(), 1);

        let spike = EnvelopeDensity::new(vec![0.0, 0.0, 0.0, 4.0]).unwrap();
        let r = core_check(&d, cc(2), &spike).unwrap();
        assert!(!r.passes(CORE_TOL));
        let worst = r.worst_set().unwrap();
        assert_eq!(r.members(worst), &[3]);
        assert_eq!(worst.mass, 1.0);
        assert_eq!(worst.excess(), 1.0 - 0.4375);

        let short = EnvelopeDensity::new(vec![1.0; 3]).unwrap();
        assert!(matches!(
            core_check(&d, cc(2), &short),
            Err(RiskError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dual_gap_examples() {
        let d = d4();
        assert!(
            dual_gap(&d, cc(2), &extremal_density(&d, cc(2)))
                .unwrap()
                .abs()
                <= 1e-10
        );
        assert_eq!(
            dual_gap(&d, cc(2), &EnvelopeDensity::ones(4)).unwrap(),
            0.625
        );
        let c = EmpiricalDistribution::constant(2.0).unwrap();
        assert_eq!(dual_gap(&c, cc(3), &EnvelopeDensity::ones(1)).unwrap(), 0.0);

        let spike = EnvelopeDensity::new(vec![0.0, 0.0, 0.0, 4.0]).unwrap();
        assert!(matches!(
            dual_gap(&d, cc(2), &spike),
            Err(RiskError::NotInEnvelope { .. })
        ));
    }

    #[test]
    fn mixture_of_ones_is_ones() {
        let d = d4();
        let fam = CvarFeasibleFamily::piecewise_constant(
            vec![0.0, 0.3, 0.8, 1.0],
            vec![EnvelopeDensity::ones(4); 3],
        )
        .unwrap();
        for n in 1..6 {
            let q = mixture_density(&d, cc(n), &fam).unwrap();
            for &x in q.q() {
                assert!((x - 1.0).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn mixture_of_cvar_maximizers_is_extremal() {
        let d = d4();
        let fam = CvarFeasibleFamily::cvar_extremal(&d);
        for n in 1..8 {
            let q = mixture_density(&d, cc(n), &fam).unwrap();
            let e = extremal_density(&d, cc(n));
            for (a, b) in q.q().iter().zip(e.q()) {
                assert!((a - b).abs() <= 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn cvar_extremal_family_matches_pointwise_maximizer() {
        let d = EmpiricalDistribution::from_samples(&[
            (-1.0, 0.15),
            (0.0, 0.35),
            (2.0, 0.2),
            (5.0, 0.3),
        ])
        .unwrap();
        let fam = CvarFeasibleFamily::cvar_extremal(&d);
        fam.validate(&d).unwrap();
        for i in 0..100 {
            let a = i as f64 / 100.0;
            let j = fam.breakpoints().partition_point(|&b| b <= a) - 1;
            let seg = &fam.densities()[j];
            let pointwise = cvar_extremal_density(&d, lvl(a));
            for k in 0..d.len() {
                let q = seg.base[k] + seg.tail[k] / (1.0 - a);
                assert!((q - pointwise.q()[k]).abs() <= 1e-12, "a={a} k={k}");
            }
        }
    }

    #[test]
    fn infeasible_family_rejected() {
        let d = d4();
        // Above the CVaR cap 1/(1-0) = 1 on the first segment.
        let bad = EnvelopeDensity::new(vec![0.0, 0.0, 2.0, 2.0]).unwrap();
        let fam = CvarFeasibleFamily::piecewise_constant(vec![0.0, 1.0], vec![bad]).unwrap();
        assert!(matches!(
            mixture_density(&d, cc(2), &fam),
            Err(RiskError::InfeasibleFamily(_))
        ));
        // Fine once the segment starts at alpha = 0.5.
        let ok = CvarFeasibleFamily::piecewise_constant(
            vec![0.0, 0.5, 1.0],
            vec![
                EnvelopeDensity::ones(4),
                EnvelopeDensity::new(vec![0.0, 0.0, 2.0, 2.0]).unwrap(),
            ],
        )
        .unwrap();
        let q = mixture_density(&d, cc(2), &ok).unwrap();
        assert!((q.mean(&d) - 1.0).abs() <= 1e-12);
        assert!(CvarFeasibleFamily::piecewise_constant(
            vec![0.0, 0.5],
            vec![EnvelopeDensity::ones(4)]
        )
        .is_err());
    }

    #[test]
    fn discrete_envelope_examples() {
        let d = d4();
        let single = DiscreteMixtureSpec::new(vec![(1.0, lvl(0.0))]).unwrap();
        let r = discrete_envelope_check(&d, &single, &[EnvelopeDensity::ones(4)]).unwrap();
        assert_eq!(r.density.q(), &[1.0; 4]);
        assert_eq!(r.value, 2.5);

        let spec = DiscreteMixtureSpec::new(vec![(0.5, lvl(0.0)), (0.5, lvl(0.5))]).unwrap();
        let parts = [
            cvar_extremal_density(&d, lvl(0.0)),
            cvar_extremal_density(&d, lvl(0.5)),
        ];
        let r = discrete_envelope_check(&d, &spec, &parts).unwrap();
        assert!((r.value - 3.0).abs() <= 1e-12);
        assert!((r.bound - (0.5 * 2.5 + 0.5 * 3.5)).abs() <= 1e-12);

        let too_big = [
            EnvelopeDensity::ones(4),
            EnvelopeDensity::new(vec![0.0, 0.0, 0.0, 4.0]).unwrap(),
        ];
        assert!(matches!(
            discrete_envelope_check(&d, &spec, &too_big),
            Err(RiskError::InfeasiblePart { index: 1, .. })
        ));
    }

    #[test]
    fn cvar_extremal_density_attains_cvar() {
        let d = d4();
        for a in [0.0, 0.25, 0.5, 0.6, 0.75, 0.9] {
            let e = cvar_extremal_density(&d, lvl(a));
            assert!((e.mean(&d) - 1.0).abs() <= 1e-15);
            assert!((e.pairing(&d) - cvar_min(&d, lvl(a)).value).abs() <= 1e-12);
            assert!(e.max() <= 1.0 / (1.0 - a) + 1e-12);
        }
    }

    #[test]
    fn mixture_spec_validation() {
        assert!(DiscreteMixtureSpec::new(vec![]).is_err());
        assert!(DiscreteMixtureSpec::new(vec![(0.5, lvl(0.1))]).is_err());
        assert!(DiscreteMixtureSpec::new(vec![(-0.5, lvl(0.1)), (1.5, lvl(0.2))]).is_err());
    }
}
