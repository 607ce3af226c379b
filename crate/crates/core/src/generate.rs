//! Seeded random laws, joint scenario tables and envelope families for the
//! verification suites.

use crate::axioms::PairedScenarios;
use crate::dist::EmpiricalDistribution;
use crate::envelope::{CvarFeasibleFamily, EnvelopeDensity};
use crate::measures::RiskLevel;
use crate::sampler::SeededSampler;

pub const VALUE_RANGE: (f64, f64) = (-100.0, 100.0);
const MIN_WEIGHT: f64 = 0.05;

fn random_value(s: &mut SeededSampler, integer_valued: bool) -> f64 {
    let v = s.uniform_in(VALUE_RANGE.0, VALUE_RANGE.1);
    if integer_valued {
        v.round()
    } else {
        v
    }
}

/// Law with `1..=max_atoms` samples, values in `[-100, 100)` and weights in
/// `[0.05, 1)`. One draw in four uses integer values so that duplicate
/// samples (merged atoms) occur.
pub fn random_distribution(s: &mut SeededSampler, max_atoms: usize) -> EmpiricalDistribution {
    let count = s.int_in(1, max_atoms.max(1));
    let integer_valued = s.next_uniform() < 0.25;
    let pairs: Vec<(f64, f64)> = (0..count)
        .map(|_| {
            (
                random_value(s, integer_valued),
                s.uniform_in(MIN_WEIGHT, 1.0),
            )
        })
        .collect();
    EmpiricalDistribution::from_samples(&pairs).expect("positive finite weights")
}

/// Half the time a small law (at most 6 atoms), otherwise up to `max_atoms`.
pub fn random_suite_distribution(s: &mut SeededSampler, max_atoms: usize) -> EmpiricalDistribution {
    if s.next_uniform() < 0.5 {
        random_distribution(s, 6.min(max_atoms))
    } else {
        random_distribution(s, max_atoms)
    }
}

/// A random joint table of `(X, Y)`, drawn from one of four couplings:
/// independent product, comonotone, antithetic, or arbitrary scenarios.
pub fn random_pair(s: &mut SeededSampler, max_scenarios: usize) -> PairedScenarios {
    match s.int_in(0, 3) {
        0 => {
            let side = ((max_scenarios as f64).sqrt() as usize).max(1);
            let x = random_distribution(s, side);
            let y = random_distribution(s, side);
            PairedScenarios::independent(&x, &y)
        }
        1 => {
            let x = random_distribution(s, max_scenarios);
            let scale = s.uniform_in(0.0, 3.0);
            let shift = s.uniform_in(-20.0, 20.0);
            let ys: Vec<f64> = x.values().iter().map(|v| scale * v + shift).collect();
            PairedScenarios::new(x.values().to_vec(), ys, x.probs().to_vec()).expect("valid table")
        }
        2 => {
            let x = random_distribution(s, max_scenarios);
            let ys: Vec<f64> = x.values().iter().map(|v| -v).collect();
            PairedScenarios::new(x.values().to_vec(), ys, x.probs().to_vec()).expect("valid table")
        }
        _ => random_joint(s, max_scenarios),
    }
}

/// Arbitrary scenarios: both coordinates and the scenario weights random.
pub fn random_joint(s: &mut SeededSampler, max_scenarios: usize) -> PairedScenarios {
    let count = s.int_in(1, max_scenarios.max(1));
    let integer_valued = s.next_uniform() < 0.25;
    let mut x = Vec::with_capacity(count);
    let mut y = Vec::with_capacity(count);
    let mut w = Vec::with_capacity(count);
    for _ in 0..count {
        x.push(random_value(s, integer_valued));
        y.push(random_value(s, integer_valued));
        w.push(s.uniform_in(MIN_WEIGHT, 1.0));
    }
    PairedScenarios::from_weights(x, y, &w).expect("valid table")
}

/// `(X, X + D)` with `D >= 0` scenario-wise, for monotonicity checks.
pub fn random_ordered_pair(s: &mut SeededSampler, max_scenarios: usize) -> PairedScenarios {
    let base = random_joint(s, max_scenarios);
    let bump_prob = s.next_uniform();
    let ys: Vec<f64> = base
        .x()
        .iter()
        .map(|&v| {
            if s.next_uniform() < bump_prob {
                v + s.uniform_in(0.0, 10.0)
            } else {
                v
            }
        })
        .collect();
    PairedScenarios::new(base.x().to_vec(), ys, base.probs().to_vec()).expect("valid table")
}

/// `(X, X + E)` with `E` a small random perturbation, for the Lipschitz check.
pub fn random_perturbation(s: &mut SeededSampler, x: &EmpiricalDistribution) -> PairedScenarios {
    let size = s.uniform_in(0.0, 5.0);
    let ys: Vec<f64> = x
        .values()
        .iter()
        .map(|&v| v + size * s.uniform_in(-1.0, 1.0))
        .collect();
    PairedScenarios::new(x.values().to_vec(), ys, x.probs().to_vec()).expect("valid table")
}

fn shuffle(s: &mut SeededSampler, xs: &mut [usize]) {
    for i in (1..xs.len()).rev() {
        let j = s.int_in(0, i);
        xs.swap(i, j);
    }
}

/// A random density with `0 <= Q <= 1/(1-alpha)` and `E(Q) = 1`: a greedy
/// fill of the cap over a random atom order, mixed with `Q = 1`.
pub fn random_cvar_density(
    s: &mut SeededSampler,
    d: &EmpiricalDistribution,
    level: RiskLevel,
) -> EnvelopeDensity {
    let cap = 1.0 / level.tail();
    let probs = d.probs();
    let mut order: Vec<usize> = (0..d.len()).collect();
    shuffle(s, &mut order);
    let mut q = vec![0.0; d.len()];
    let mut remaining = 1.0f64;
    for &k in &order {
        if remaining <= 0.0 {
            break;
        }
        let take = cap.min(remaining / probs[k]);
        q[k] = take;
        remaining -= take * probs[k];
    }
    let mix = s.next_uniform();
    let q = q.into_iter().map(|x| mix * x + (1.0 - mix)).collect();
    EnvelopeDensity::new(q).expect("finite density")
}

/// A random piecewise-constant family with 1..=8 segments, each segment
/// density feasible at the segment's left end (hence on all of it).
pub fn random_family(s: &mut SeededSampler, d: &EmpiricalDistribution) -> CvarFeasibleFamily {
    let segments = s.int_in(1, 8);
    let mut cuts: Vec<f64> = (1..segments)
        .map(|_| s.next_uniform())
        .filter(|&c| c > 0.0)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut breakpoints = vec![0.0];
    breakpoints.extend(cuts);
    breakpoints.push(1.0);
    let densities = breakpoints[..breakpoints.len() - 1]
        .iter()
        .map(|&a| random_cvar_density(s, d, RiskLevel::new(a).expect("left ends are below 1")))
        .collect();
    CvarFeasibleFamily::piecewise_constant(breakpoints, densities).expect("valid partition")
}
