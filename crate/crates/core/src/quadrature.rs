//! Composite Gauss-Legendre quadrature with caller-supplied breakpoints.

use std::f64::consts::PI;

use crate::error::{Result, RiskError};
use crate::numeric::CompensatedSum;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// found by Newton iteration on `P_n` from the Chebyshev-like initial guess.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(points: usize) -> Result<Self> {
        if !(2..=64).contains(&points) {
            return Err(RiskError::out_of_range("points per panel", points as f64));
        }
        let n = points;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn points(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over `[a, b]` with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = CompensatedSum::new();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.value()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Splits `[lo, hi]` into at least one panel per breakpoint interval, using
/// `panels` panels in total. Breakpoints outside `(lo, hi)` and duplicates
/// are ignored. Extra panels go to the intervals with the largest
/// length-per-panel, ties broken by position.
pub fn snapped_panels(
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    panels: usize,
) -> Result<Vec<(f64, f64)>> {
    let mut edges = vec![lo];
    let mut sorted: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > lo && b < hi)
        .collect();
    sorted.sort_by(f64::total_cmp);
    for b in sorted {
        if b > *edges.last().expect("non-empty") {
            edges.push(b);
        }
    }
    edges.push(hi);
    let segments = edges.len() - 1;
    if panels < segments {
        return Err(RiskError::BudgetTooSmall(format!(
            "{panels} panels for {segments} breakpoint intervals"
        )));
    }

    let lengths: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
    let total: f64 = lengths.iter().sum();
    let extra = panels - segments;
    let mut counts = vec![1usize; segments];
    // Proportional share, then largest remainders.
    let mut assigned = 0;
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(segments);
    for (k, &len) in lengths.iter().enumerate() {
        let share = extra as f64 * len / total;
        let whole = share.floor() as usize;
        counts[k] += whole;
        assigned += whole;
        remainders.push((share - whole as f64, k));
    }
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, k) in remainders.iter().take(extra.saturating_sub(assigned)) {
        counts[k] += 1;
    }

    let mut out = Vec::with_capacity(panels);
    for (k, w) in edges.windows(2).enumerate() {
        let step = (w[1] - w[0]) / counts[k] as f64;
        for j in 0..counts[k] {
            let a = w[0] + step * j as f64;
            let b = if j + 1 == counts[k] {
                w[1]
            } else {
                w[0] + step * (j + 1) as f64
            };
            out.push((a, b));
        }
    }
    Ok(out)
}
