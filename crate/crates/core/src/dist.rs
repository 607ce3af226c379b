//! Finite empirical laws.
//!
//! An [`EmpiricalDistribution`] is a list of strictly increasing atoms with
//! strictly positive probabilities. Cumulative probabilities are computed once
//! with compensated prefix sums and the last one is pinned to exactly 1, so
//! every consumer (CDF, quantile, VaR, the MAXVAR routes) reads the same
//! partial sums.

use crate::error::{Result, RiskError};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::sampler::SeededSampler;

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

/// `P(X <= at)` and `P(X > at)`, complements of a single partial sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfValue {
    pub at: f64,
    pub le_prob: f64,
    pub gt_prob: f64,
}

impl EmpiricalDistribution {
    /// Builds a law from `(value, weight)` pairs. Equal values are merged,
    /// weights are normalized by their compensated total and zero-weight
    /// samples are dropped.
    pub fn from_samples(raw: &[(f64, f64)]) -> Result<Self> {
        if raw.is_empty() {
            return Err(RiskError::EmptyInput);
        }
        for &(v, w) in raw {
            if !v.is_finite() {
                return Err(RiskError::NonFiniteValue("sample value"));
            }
            if !w.is_finite() {
                return Err(RiskError::NonFiniteValue("sample weight"));
            }
            if w < 0.0 {
                return Err(RiskError::out_of_range("sample weight", w));
            }
        }
        let total = compensated_sum(raw.iter().map(|&(_, w)| w));
        if total <= 0.0 {
            return Err(RiskError::AllZeroWeights);
        }

        // +0.0 and -0.0 must land on the same atom.
        let mut pairs: Vec<(f64, f64)> = raw
            .iter()
            .filter(|&&(_, w)| w > 0.0)
            .map(|&(v, w)| (if v == 0.0 { 0.0 } else { v }, w))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut values = Vec::with_capacity(pairs.len());
        let mut weights: Vec<CompensatedSum> = Vec::with_capacity(pairs.len());
        for (v, w) in pairs {
            if values.last().map(|&last: &f64| last.to_bits()) == Some(v.to_bits()) {
                weights.last_mut().expect("parallel vectors").add(w);
            } else {
                values.push(v);
                let mut acc = CompensatedSum::new();
                acc.add(w);
                weights.push(acc);
            }
        }
        let probs: Vec<f64> = weights.iter().map(|w| w.value() / total).collect();
        Ok(Self::from_sorted_unchecked(values, probs))
    }

    /// Equally weighted law on `values`.
    pub fn uniform(values: &[f64]) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = values.iter().map(|&v| (v, 1.0)).collect();
        Self::from_samples(&pairs)
    }

    /// Single atom at `c`.
    pub fn constant(c: f64) -> Result<Self> {
        Self::from_samples(&[(c, 1.0)])
    }

    /// Builds from strictly increasing values and already-normalized positive
    /// probabilities.
    fn from_sorted_unchecked(values: Vec<f64>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), probs.len());
        debug_assert!(values.windows(2).all(|w| w[0] < w[1]));
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = CompensatedSum::new();
        for &p in &probs {
            acc.add(p);
            let prev = cumulative.last().copied().unwrap_or(0.0);
            cumulative.push(acc.value().clamp(prev, 1.0));
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Self {
            values,
            probs,
            cumulative,
        }
    }

    /// Builds from value-sorted pairs whose probabilities already sum to one,
    /// merging neighbours that compare equal.
    fn from_sorted_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut values: Vec<f64> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (v, p) in pairs {
            let v = if v == 0.0 { 0.0 } else { v };
            match values.last() {
                Some(&last) if last == v => *probs.last_mut().expect("parallel vectors") += p,
                _ => {
                    values.push(v);
                    probs.push(p);
                }
            }
        }
        Self::from_sorted_unchecked(values, probs)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `F_k = P(X <= values[k])`; the last entry is exactly 1.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn max_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn is_constant(&self) -> bool {
        self.values.len() == 1
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn cdf(&self, t: f64) -> Result<CdfValue> {
        if !t.is_finite() {
            return Err(RiskError::NonFiniteValue("cdf threshold"));
        }
        let below = self.values.partition_point(|&v| v <= t);
        let le_prob = if below == 0 {
            0.0
        } else {
            self.cumulative[below - 1]
        };
        Ok(CdfValue {
            at: t,
            le_prob,
            gt_prob: 1.0 - le_prob,
        })
    }

    /// Left-continuous generalized inverse: smallest atom `v` with
    /// `P(X <= v) >= u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(RiskError::out_of_range("quantile level", u));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        let k = self.cumulative.partition_point(|&c| c < u);
        self.values[k.min(self.values.len() - 1)]
    }

    pub fn expectation(&self) -> f64 {
        compensated_sum(self.atoms().map(|(v, p)| v * p))
    }

    pub fn abs_expectation(&self) -> f64 {
        compensated_sum(self.atoms().map(|(v, p)| v.abs() * p))
    }

    pub fn variance(&self) -> f64 {
        let mean = self.expectation();
        compensated_sum(self.atoms().map(|(v, p)| (v - mean) * (v - mean) * p))
    }

    /// `count` i.i.d. inverse-CDF draws from the sampler's stream.
    pub fn sample(&self, sampler: &mut SeededSampler, count: usize) -> Vec<f64> {
        (0..count)
            .map(|_| self.quantile_unchecked(sampler.next_uniform()))
            .collect()
    }

    /// Law of `scale * X + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self> {
        if !scale.is_finite() || !shift.is_finite() {
            return Err(RiskError::NonFiniteValue("affine coefficient"));
        }
        if scale == 0.0 {
            return Self::constant(shift);
        }
        let mut mapped: Vec<(f64, f64)> =
            self.atoms().map(|(v, p)| (scale * v + shift, p)).collect();
        if scale < 0.0 {
            mapped.reverse();
        }
        let out = Self::from_sorted_pairs(mapped);
        if out.values.iter().any(|v| !v.is_finite()) {
            return Err(RiskError::NonFiniteValue("affine image"));
        }
        Ok(out)
    }
}
