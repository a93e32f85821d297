//! Function classes, finite-support models and point samplers.
//!
//! Exact harnesses work on a [`DiscreteModel`]: the class tabulated on the
//! support of a [`DiscreteDistribution`], so that any sample drawn from the
//! product measure is just a tuple of support indices. Monte Carlo harnesses
//! work on any [`SampleSource`].

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::deterministic_sum;
use crate::types::{DiscreteDistribution, EvaluatedClass, Sample, ENVELOPE_SLACK};

/// A finite indexed family of real functions with a uniform envelope.
pub trait FunctionClass: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn envelope(&self) -> f64;

    fn eval(&self, i: usize, x: &[f64]) -> f64;

    /// Restricts the class to a sample.
    fn evaluate(&self, sample: &Sample) -> Result<EvaluatedClass> {
        let evals = (0..self.len())
            .map(|i| sample.points().iter().map(|x| self.eval(i, x)).collect())
            .collect();
        EvaluatedClass::new(evals, self.envelope())
    }
}

/// `f_i(x) = <w_i, x>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClass {
    pub weights: Vec<Vec<f64>>,
    pub envelope: f64,
}

impl FunctionClass for LinearClass {
    fn len(&self) -> usize {
        self.weights.len()
    }

    fn envelope(&self) -> f64 {
        self.envelope
    }

    fn eval(&self, i: usize, x: &[f64]) -> f64 {
        dot(&self.weights[i], x)
    }
}

/// Class given by a closure `(index, point) -> value`.
pub struct FnClass<F> {
    m: usize,
    envelope: f64,
    f: F,
}

impl<F: Fn(usize, &[f64]) -> f64 + Sync> FnClass<F> {
    pub fn new(m: usize, envelope: f64, f: F) -> Self {
        FnClass { m, envelope, f }
    }
}

impl<F: Fn(usize, &[f64]) -> f64 + Sync> FunctionClass for FnClass<F> {
    fn len(&self) -> usize {
        self.m
    }

    fn envelope(&self) -> f64 {
        self.envelope
    }

    fn eval(&self, i: usize, x: &[f64]) -> f64 {
        (self.f)(i, x)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A class tabulated on the support of a finite distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteModel {
    /// `table[i][j] = f_i(support_j)`
    table: Vec<Vec<f64>>,
    probs: Vec<f64>,
    envelope: f64,
    population_means: Vec<f64>,
}

impl DiscreteModel {
    pub fn new<C: FunctionClass + ?Sized>(class: &C, dist: &DiscreteDistribution) -> Result<Self> {
        let table = (0..class.len())
            .map(|i| dist.support().iter().map(|x| class.eval(i, x)).collect())
            .collect();
        Self::from_table(table, dist.probs().to_vec(), class.envelope())
    }

    /// `table` is `m x |support|`; `probs` must form a distribution.
    pub fn from_table(table: Vec<Vec<f64>>, probs: Vec<f64>, envelope: f64) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::invalid("function class must be nonempty"));
        }
        // reuse the distribution checks on a dummy support
        DiscreteDistribution::new(vec![Vec::new(); probs.len()], probs.clone())?;
        for row in &table {
            if row.len() != probs.len() {
                return Err(Error::DimensionMismatch {
                    expected: probs.len(),
                    found: row.len(),
                });
            }
            if let Some(v) = row
                .iter()
                .find(|v| !v.is_finite() || v.abs() > envelope + ENVELOPE_SLACK)
            {
                return Err(Error::invalid(format!(
                    "value {v} exceeds envelope {envelope}"
                )));
            }
        }
        let mut model = DiscreteModel {
            table,
            probs,
            envelope,
            population_means: Vec::new(),
        };
        model.population_means = model.compute_means();
        Ok(model)
    }

    fn compute_means(&self) -> Vec<f64> {
        self.table
            .iter()
            .map(|row| {
                let terms: Vec<f64> = row.iter().zip(&self.probs).map(|(v, p)| v * p).collect();
                deterministic_sum(&terms)
            })
            .collect()
    }

    /// Replaces the envelope without re-validating the table.
    pub fn with_envelope_unchecked(mut self, envelope: f64) -> Self {
        self.envelope = envelope;
        self
    }

    pub fn m(&self) -> usize {
        self.table.len()
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    pub fn population_means(&self) -> &[f64] {
        &self.population_means
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.table[i][j]
    }

    /// Writes the class realized on the index tuple `sample` into `rows`.
    pub fn realize_into(&self, sample: &[usize], rows: &mut [Vec<f64>]) {
        for (row, tab) in rows.iter_mut().zip(&self.table) {
            row.clear();
            row.extend(sample.iter().map(|&j| tab[j]));
        }
    }

    /// The class builder: sample tuple -> evaluated class with exact means.
    pub fn realize(&self, sample: &[usize]) -> EvaluatedClass {
        let evals = self
            .table
            .iter()
            .map(|tab| sample.iter().map(|&j| tab[j]).collect())
            .collect();
        EvaluatedClass::unchecked(evals, self.envelope, Some(self.population_means.clone()))
    }

    pub(crate) fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }

    pub(crate) fn draw_index(&self, rng: &mut ChaCha8Rng) -> usize {
        sample_index(&self.probs, rng)
    }
}

fn sample_index(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // rounding left u above the final cumulative sum; take the last positive mass
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Anything that can draw a random sample of size `n` and return the class
/// realized on it, population means included.
pub trait SampleSource: Sync {
    fn m(&self) -> usize;

    fn envelope(&self) -> f64;

    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> EvaluatedClass;
}

impl SampleSource for DiscreteModel {
    fn m(&self) -> usize {
        self.table.len()
    }

    fn envelope(&self) -> f64 {
        self.envelope
    }

    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> EvaluatedClass {
        let idx: Vec<usize> = (0..n).map(|_| self.draw_index(rng)).collect();
        self.realize(&idx)
    }
}

/// Random point generator.
pub trait PointSampler: Sync {
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
}

/// Named sampler families available from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuiltinSampler {
    /// Coordinatewise uniform on `[low, high]^dim`.
    UniformBox { low: f64, high: f64, dim: usize },
    /// Isotropic normal `N(mean, std^2 I)`.
    Gaussian { mean: f64, std: f64, dim: usize },
    /// Uniform on the sphere of the given radius.
    Sphere { radius: f64, dim: usize },
    /// Draws from a finite-support distribution.
    Discrete { dist: DiscreteDistribution },
}

impl PointSampler for BuiltinSampler {
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            BuiltinSampler::UniformBox { low, high, dim } => (0..*dim)
                .map(|_| low + (high - low) * rng.random::<f64>())
                .collect(),
            BuiltinSampler::Gaussian { mean, std, dim } => (0..*dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    mean + std * z
                })
                .collect(),
            BuiltinSampler::Sphere { radius, dim } => {
                let dir = gaussian_direction(*dim, rng);
                dir.into_iter().map(|v| v * radius).collect()
            }
            BuiltinSampler::Discrete { dist } => dist.support()[sample_index(dist.probs(), rng)].clone(),
        }
    }
}

pub(crate) fn gaussian_direction(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return z.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// A class paired with a point sampler and explicitly supplied population means.
pub struct SampledModel<C, S> {
    class: C,
    sampler: S,
    population_means: Vec<f64>,
}

impl<C: FunctionClass, S: PointSampler> SampledModel<C, S> {
    pub fn new(class: C, sampler: S, population_means: Vec<f64>) -> Result<Self> {
        if population_means.len() != class.len() {
            return Err(Error::DimensionMismatch {
                expected: class.len(),
                found: population_means.len(),
            });
        }
        if class.is_empty() {
            return Err(Error::invalid("function class must be nonempty"));
        }
        Ok(SampledModel {
            class,
            sampler,
            population_means,
        })
    }

    pub fn class(&self) -> &C {
        &self.class
    }
}

impl<C: FunctionClass, S: PointSampler> SampleSource for SampledModel<C, S> {
    fn m(&self) -> usize {
        self.class.len()
    }

    fn envelope(&self) -> f64 {
        self.class.envelope()
    }

    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> EvaluatedClass {
        let points: Vec<Vec<f64>> = (0..n).map(|_| self.sampler.sample_point(rng)).collect();
        let evals = (0..self.class.len())
            .map(|i| points.iter().map(|x| self.class.eval(i, x)).collect())
            .collect();
        EvaluatedClass::unchecked(
            evals,
            self.class.envelope(),
            Some(self.population_means.clone()),
        )
    }
}
