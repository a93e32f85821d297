//! Domain types shared by every verification harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when checking `|evals| <= envelope`.
pub const ENVELOPE_SLACK: f64 = 1e-12;

/// Size caps for exact enumeration paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    /// Largest `n` for which all `2^n` sign vectors are enumerated.
    pub max_sign_len: u32,
    /// Largest number of tuples any product-measure enumeration may visit.
    pub max_product_tuples: u64,
    /// Largest (deduplicated) class size for exact minimal covers.
    pub max_exact_cover: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_sign_len: 20,
            max_product_tuples: 1_000_000,
            max_exact_cover: 16,
        }
    }
}

impl Caps {
    pub(crate) fn check_signs(&self, n: usize) -> Result<()> {
        if n > self.max_sign_len as usize {
            return Err(Error::ExactEnumerationLimit {
                what: "sign vectors",
                required: 2f64.powi(n as i32),
                cap: 2f64.powi(self.max_sign_len as i32),
            });
        }
        Ok(())
    }

    pub(crate) fn check_tuples(&self, what: &'static str, required: f64) -> Result<()> {
        if required > self.max_product_tuples as f64 {
            return Err(Error::ExactEnumerationLimit {
                what,
                required,
                cap: self.max_product_tuples as f64,
            });
        }
        Ok(())
    }
}

/// An ordered sample of `n >= 1` points of common dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    points: Vec<Vec<f64>>,
}

impl Sample {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::invalid("sample must contain at least one point"))?;
        let dim = first.len();
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        Ok(Sample { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

/// A finite function class restricted to a sample: `evals[i][k] = f_i(S_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedClass {
    evals: Vec<Vec<f64>>,
    envelope_b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    population_means: Option<Vec<f64>>,
}

impl EvaluatedClass {
    /// Checks shape and the envelope; `m >= 1`, `n >= 1`.
    pub fn new(evals: Vec<Vec<f64>>, envelope_b: f64) -> Result<Self> {
        let class = EvaluatedClass {
            evals,
            envelope_b,
            population_means: None,
        };
        class.validate()?;
        Ok(class)
    }

    pub fn with_population_means(mut self, means: Vec<f64>) -> Result<Self> {
        if means.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                found: means.len(),
            });
        }
        if let Some(mu) = means
            .iter()
            .find(|mu| !mu.is_finite() || mu.abs() > self.envelope_b + ENVELOPE_SLACK)
        {
            return Err(Error::invalid(format!(
                "population mean {mu} exceeds envelope {}",
                self.envelope_b
            )));
        }
        self.population_means = Some(means);
        Ok(self)
    }

    /// Builds a class without checking the envelope.
    ///
    /// Used by audits that must be able to represent a deliberately
    /// understated envelope.
    pub fn unchecked(evals: Vec<Vec<f64>>, envelope_b: f64, means: Option<Vec<f64>>) -> Self {
        EvaluatedClass {
            evals,
            envelope_b,
            population_means: means,
        }
    }

    fn validate(&self) -> Result<()> {
        let first = self
            .evals
            .first()
            .ok_or_else(|| Error::invalid("function class must be nonempty"))?;
        let n = first.len();
        if n == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        if !(self.envelope_b >= 0.0 && self.envelope_b.is_finite()) {
            return Err(Error::invalid(format!(
                "envelope must be finite and nonnegative, got {}",
                self.envelope_b
            )));
        }
        for row in &self.evals {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            if let Some(v) = row
                .iter()
                .find(|v| !v.is_finite() || v.abs() > self.envelope_b + ENVELOPE_SLACK)
            {
                return Err(Error::invalid(format!(
                    "evaluation {v} exceeds envelope {}",
                    self.envelope_b
                )));
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.evals.len()
    }

    pub fn n(&self) -> usize {
        self.evals[0].len()
    }

    pub fn evals(&self) -> &[Vec<f64>] {
        &self.evals
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.evals[i]
    }

    pub fn envelope(&self) -> f64 {
        self.envelope_b
    }

    pub fn population_means(&self) -> Option<&[f64]> {
        self.population_means.as_deref()
    }

    /// Multiplies every value (and the envelope and means) by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        EvaluatedClass {
            evals: self
                .evals
                .iter()
                .map(|r| r.iter().map(|v| v * c).collect())
                .collect(),
            envelope_b: self.envelope_b * c.abs(),
            population_means: self
                .population_means
                .as_ref()
                .map(|m| m.iter().map(|v| v * c).collect()),
        }
    }

    /// The class together with the negation of every row.
    pub fn with_negations(&self) -> Self {
        let mut evals = self.evals.clone();
        evals.extend(
            self.evals
                .iter()
                .map(|r| r.iter().map(|v| -v).collect::<Vec<_>>()),
        );
        EvaluatedClass {
            evals,
            envelope_b: self.envelope_b,
            population_means: self.population_means.as_ref().map(|m| {
                let mut all = m.clone();
                all.extend(m.iter().map(|v| -v));
                all
            }),
        }
    }

    pub(crate) fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

/// Finite-support probability measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    support: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::invalid("distribution support must be nonempty"));
        }
        if support.len() != probs.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                found: probs.len(),
            });
        }
        let dim = support[0].len();
        if let Some(p) = support.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
            return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
        }
        let total = crate::sum::deterministic_sum(&probs);
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(DiscreteDistribution { support, probs })
    }

    pub fn uniform(support: Vec<Vec<f64>>) -> Result<Self> {
        let s = support.len().max(1);
        Self::new(support, vec![1.0 / s as f64; s])
    }

    pub fn point_mass(x: Vec<f64>) -> Self {
        DiscreteDistribution {
            support: vec![x],
            probs: vec![1.0],
        }
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// One sign vector `sigma in {-1, +1}^n`; bit `k` set means `sigma_k = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignAssignment {
    bits: u64,
    n: u32,
}

impl SignAssignment {
    pub fn new(bits: u64, n: u32) -> Self {
        debug_assert!(n <= 64);
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        SignAssignment {
            bits: bits & mask,
            n,
        }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn sign(&self, k: usize) -> f64 {
        if (self.bits >> k) & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.sign(k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_rejects_envelope_breach_and_empty() {
        assert!(EvaluatedClass::new(vec![vec![0.5, 2.0]], 1.0).is_err());
        assert!(EvaluatedClass::new(vec![], 1.0).is_err());
        assert!(EvaluatedClass::new(vec![vec![]], 1.0).is_err());
        assert!(EvaluatedClass::new(vec![vec![1.0], vec![1.0, 2.0]], 5.0).is_err());
        assert!(EvaluatedClass::new(vec![vec![1.0 + 1e-13]], 1.0).is_ok());
    }

    #[test]
    fn means_must_match_class() {
        let c = EvaluatedClass::new(vec![vec![0.5, 0.5]], 1.0).unwrap();
        assert!(c.clone().with_population_means(vec![0.1, 0.2]).is_err());
        assert!(c.clone().with_population_means(vec![1.5]).is_err());
        assert!(c.with_population_means(vec![0.1]).is_ok());
    }

    #[test]
    fn distribution_validation() {
        assert!(DiscreteDistribution::new(vec![vec![0.0], vec![1.0]], vec![0.3, 0.7]).is_ok());
        assert!(DiscreteDistribution::new(vec![vec![0.0], vec![1.0]], vec![0.3, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![vec![0.0], vec![1.0]], vec![-0.1, 1.1]).is_err());
        assert!(DiscreteDistribution::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn sample_dimension_check() {
        assert!(Sample::new(vec![]).is_err());
        assert!(Sample::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert_eq!(Sample::new(vec![vec![1.0, 2.0]; 3]).unwrap().dim(), 2);
    }

    #[test]
    fn sign_decoding() {
        let s = SignAssignment::new(0b101, 3);
        assert_eq!(s.to_vec(), vec![-1.0, 1.0, -1.0]);
    }
}
