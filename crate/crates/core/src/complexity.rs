//! Empirical and expected Rademacher complexity.
//!
//! The empirical complexity of a class restricted to a sample of size `n` is
//!
//! ```text
//! R_hat = 2^-n * sum_sigma max_i | (1/n) sum_k sigma_k f_i(S_k) |
//! ```
//!
//! computed here by walking every sign vector when `n` is under the sign cap,
//! or estimated from independent sign draws otherwise. The expected
//! complexity averages `R_hat` over samples from the product measure.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerate::{tuple_weight, ProductSpace};
use crate::error::{Error, Result};
use crate::model::{DiscreteModel, SampleSource};
use crate::rng::stream;
use crate::sum::{deterministic_sum, mean_and_std_error};
use crate::types::{Caps, EvaluatedClass, Sample};

/// Minimum number of Monte Carlo draws accepted by the estimators.
pub const MIN_MC_DRAWS: usize = 100;

// Below this many sign vectors the exact walk stays on the calling thread.
const PAR_SIGN_THRESHOLD: u64 = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactEnumeration,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityResult {
    pub value: f64,
    pub method: Method,
    pub draws: u64,
    pub std_error: f64,
    pub seed: u64,
}

impl ComplexityResult {
    pub fn exact(value: f64) -> Self {
        ComplexityResult {
            value,
            method: Method::ExactEnumeration,
            draws: 0,
            std_error: 0.0,
            seed: 0,
        }
    }
}

/// Whether the absolute value is taken inside the supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Abs,
    WithoutAbs,
}

/// `max_i (1/n) sum_k sigma_k rows[i][k]` (absolute or signed) for one sign word.
#[inline]
fn sup_for_signs(rows: &[Vec<f64>], sign_of: impl Fn(usize) -> f64, variant: Variant) -> f64 {
    let n = rows[0].len() as f64;
    let mut best = f64::NEG_INFINITY;
    for row in rows {
        let mut s = 0.0;
        for (k, v) in row.iter().enumerate() {
            s += sign_of(k) * v;
        }
        let s = match variant {
            Variant::Abs => s.abs(),
            Variant::WithoutAbs => s,
        } / n;
        // strict comparison: first index wins ties
        if s > best {
            best = s;
        }
    }
    best
}

#[inline]
fn word_sign(bits: u64, k: usize) -> f64 {
    if (bits >> k) & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Exact sign average on the calling thread.
pub(crate) fn exact_sign_average(rows: &[Vec<f64>], variant: Variant) -> f64 {
    let n = rows[0].len();
    let total = 1u64 << n;
    let mut acc = crate::sum::PairwiseSum::new();
    for bits in 0..total {
        acc.push(sup_for_signs(rows, |k| word_sign(bits, k), variant));
    }
    acc.total() / total as f64
}

fn exact_sign_average_par(rows: &[Vec<f64>], variant: Variant) -> f64 {
    let n = rows[0].len();
    let total = 1u64 << n;
    if total < PAR_SIGN_THRESHOLD {
        return exact_sign_average(rows, variant);
    }
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|bits| sup_for_signs(rows, |k| word_sign(bits, k), variant))
        .collect();
    deterministic_sum(&values) / total as f64
}

fn exact(class: &EvaluatedClass, variant: Variant, caps: &Caps) -> Result<ComplexityResult> {
    caps.check_signs(class.n())?;
    Ok(ComplexityResult::exact(exact_sign_average_par(
        class.evals(),
        variant,
    )))
}

/// Exact empirical Rademacher complexity over all `2^n` sign vectors.
pub fn empirical_rademacher(class: &EvaluatedClass, caps: &Caps) -> Result<ComplexityResult> {
    exact(class, Variant::Abs, caps)
}

/// Exact empirical complexity with the supremum taken over signed sums.
pub fn empirical_rademacher_without_abs(
    class: &EvaluatedClass,
    caps: &Caps,
) -> Result<ComplexityResult> {
    exact(class, Variant::WithoutAbs, caps)
}

fn check_draws(draws: usize) -> Result<()> {
    if draws < MIN_MC_DRAWS {
        return Err(Error::invalid(format!(
            "Monte Carlo needs at least {MIN_MC_DRAWS} draws, got {draws}"
        )));
    }
    Ok(())
}

fn mc_draw_value(rows: &[Vec<f64>], seed: u64, draw: u64, variant: Variant) -> f64 {
    let n = rows[0].len();
    let mut rng = stream(seed, draw);
    let words: Vec<u64> = (0..n.div_ceil(64)).map(|_| rng.next_u64()).collect();
    sup_for_signs(rows, |k| word_sign(words[k / 64], k % 64), variant)
}

/// Monte Carlo estimate from `draws` uniform sign vectors.
///
/// Draw `d` uses the stream `(seed, d)`, so the estimate is bit-identical
/// for any thread count.
pub fn empirical_rademacher_mc(
    class: &EvaluatedClass,
    draws: usize,
    seed: u64,
) -> Result<ComplexityResult> {
    empirical_mc(class, draws, seed, Variant::Abs)
}

pub fn empirical_rademacher_mc_variant(
    class: &EvaluatedClass,
    draws: usize,
    seed: u64,
    variant: Variant,
) -> Result<ComplexityResult> {
    empirical_mc(class, draws, seed, variant)
}

fn empirical_mc(
    class: &EvaluatedClass,
    draws: usize,
    seed: u64,
    variant: Variant,
) -> Result<ComplexityResult> {
    check_draws(draws)?;
    let rows = class.evals();
    let values: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|d| mc_draw_value(rows, seed, d, variant))
        .collect();
    let (value, std_error) = mean_and_std_error(&values);
    Ok(ComplexityResult {
        value,
        method: Method::MonteCarlo,
        draws: draws as u64,
        std_error,
        seed,
    })
}

/// Expected complexity under `dist^n`, by exact product-measure enumeration.
pub fn expected_rademacher(
    model: &DiscreteModel,
    n: usize,
    caps: &Caps,
) -> Result<ComplexityResult> {
    expected_exact(model, n, caps, Variant::Abs)
}

pub(crate) fn expected_exact(
    model: &DiscreteModel,
    n: usize,
    caps: &Caps,
    variant: Variant,
) -> Result<ComplexityResult> {
    caps.check_signs(n)?;
    let space = ProductSpace::new(model.support_len(), n, caps, "product-measure tuples")?;
    let m = model.m();
    let terms: Vec<f64> = (0..space.total)
        .into_par_iter()
        .map_init(
            || (vec![0usize; n], vec![Vec::with_capacity(n); m]),
            |(tuple, rows), t| {
                space.decode(t, tuple);
                let w = tuple_weight(model.probs(), tuple);
                if w == 0.0 {
                    return 0.0;
                }
                model.realize_into(tuple, rows);
                w * exact_sign_average(rows, variant)
            },
        )
        .collect();
    Ok(ComplexityResult::exact(deterministic_sum(&terms)))
}

/// Expected complexity estimated from `draws` independent samples of size `n`.
///
/// Each sample's empirical complexity is computed exactly, so `n` must be
/// within the sign cap.
pub fn expected_rademacher_mc<S: SampleSource + ?Sized>(
    source: &S,
    n: usize,
    draws: usize,
    seed: u64,
    caps: &Caps,
) -> Result<ComplexityResult> {
    check_draws(draws)?;
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    caps.check_signs(n)?;
    let values: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|d| {
            let mut rng = stream(seed, d);
            let class = source.draw(n, &mut rng);
            exact_sign_average(class.evals(), Variant::Abs)
        })
        .collect();
    let (value, std_error) = mean_and_std_error(&values);
    Ok(ComplexityResult {
        value,
        method: Method::MonteCarlo,
        draws: draws as u64,
        std_error,
        seed,
    })
}

/// Outcome of [`check_without_abs_le_abs`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsComparison {
    pub without_abs: f64,
    pub abs: f64,
    /// `abs - without_abs`
    pub slack: f64,
}

pub fn check_without_abs_le_abs(class: &EvaluatedClass, caps: &Caps) -> Result<AbsComparison> {
    let without_abs = empirical_rademacher_without_abs(class, caps)?.value;
    let abs = empirical_rademacher(class, caps)?.value;
    if without_abs > abs + 1e-12 {
        return Err(Error::InvariantViolation {
            what: format!("without-abs complexity {without_abs} exceeds abs complexity {abs}"),
            details: class.to_json(),
        });
    }
    Ok(AbsComparison {
        without_abs,
        abs,
        slack: abs - without_abs,
    })
}

type Evaluator<'a> = Box<dyn Fn(&[f64], &[f64]) -> f64 + Sync + 'a>;

/// A continuously parameterized family `theta -> f_theta` over a box.
pub struct GridFamily<'a> {
    bounds: Vec<(f64, f64)>,
    evaluator: Evaluator<'a>,
    envelope: f64,
    levels: u32,
    tolerance: f64,
}

impl<'a> GridFamily<'a> {
    pub const DEFAULT_LEVELS: u32 = 12;
    pub const DEFAULT_TOLERANCE: f64 = 1e-6;

    /// `evaluator(theta, x)`; `envelope` must bound it on the whole box.
    pub fn new(
        bounds: Vec<(f64, f64)>,
        envelope: f64,
        evaluator: impl Fn(&[f64], &[f64]) -> f64 + Sync + 'a,
    ) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::invalid("parameter box needs at least one axis"));
        }
        if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| lo.is_nan() || hi.is_nan() || lo >= hi) {
            return Err(Error::invalid(format!("empty parameter interval [{lo}, {hi}]")));
        }
        Ok(GridFamily {
            bounds,
            evaluator: Box::new(evaluator),
            envelope,
            levels: Self::DEFAULT_LEVELS,
            tolerance: Self::DEFAULT_TOLERANCE,
        })
    }

    pub fn levels(mut self, levels: u32) -> Result<Self> {
        if levels == 0 {
            return Err(Error::invalid("grid needs at least one level"));
        }
        self.levels = levels;
        Ok(self)
    }

    /// A tolerance of zero never declares convergence.
    pub fn tolerance(mut self, tolerance: f64) -> Result<Self> {
        if tolerance.is_nan() || tolerance < 0.0 {
            return Err(Error::invalid(format!("tolerance must be nonnegative, got {tolerance}")));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    /// Grid parameters at dyadic depth `depth`: `2^depth + 1` points per axis,
    /// endpoints included, so depth `j` is a subset of depth `j + 1`.
    pub fn grid(&self, depth: u32) -> Vec<Vec<f64>> {
        let per_axis = (1u64 << depth) + 1;
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|(lo, hi)| {
                (0..per_axis)
                    .map(|t| {
                        if t == per_axis - 1 {
                            *hi
                        } else {
                            lo + (hi - lo) * (t as f64 / (per_axis - 1) as f64)
                        }
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        out
    }

    fn grid_len(&self, depth: u32) -> f64 {
        (((1u64 << depth) + 1) as f64).powi(self.bounds.len() as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridLevel {
    pub depth: u32,
    pub grid_points: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRestriction {
    /// Class over the deepest grid evaluated.
    pub class: EvaluatedClass,
    pub trace: Vec<GridLevel>,
    pub converged: bool,
    /// Refinement stopped because the next grid would exceed the tuple cap.
    pub truncated: bool,
}

/// Restricts a parameterized family to nested dyadic grids of its box and
/// tracks the empirical complexity per depth until successive depths agree
/// within the family's tolerance.
pub fn grid_restricted_class(
    family: &GridFamily<'_>,
    sample: &Sample,
    caps: &Caps,
) -> Result<GridRestriction> {
    caps.check_signs(sample.len())?;
    let mut trace: Vec<GridLevel> = Vec::new();
    let mut class = None;
    let mut converged = false;
    let mut truncated = false;
    for depth in 1..=family.levels {
        let rows_needed = family.grid_len(depth);
        if rows_needed > caps.max_product_tuples as f64 {
            if depth == 1 {
                caps.check_tuples("grid parameters", rows_needed)?;
            }
            truncated = true;
            break;
        }
        let params = family.grid(depth);
        let evals: Vec<Vec<f64>> = params
            .par_iter()
            .map(|theta| {
                sample
                    .points()
                    .iter()
                    .map(|x| (family.evaluator)(theta, x))
                    .collect()
            })
            .collect();
        let c = EvaluatedClass::new(evals, family.envelope)?;
        let value = empirical_rademacher(&c, caps)?.value;
        let done = trace
            .last()
            .is_some_and(|prev| (value - prev.value).abs() < family.tolerance);
        trace.push(GridLevel {
            depth,
            grid_points: params.len(),
            value,
        });
        class = Some(c);
        if done {
            converged = true;
            break;
        }
    }
    Ok(GridRestriction {
        class: class.expect("depth 1 is always evaluated"),
        trace,
        converged,
        truncated,
    })
}
