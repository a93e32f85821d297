//! Uniform deviation, its bounded-differences audit, the symmetrization
//! identity and the expectation bound `E[UD] <= 2 R_n`, all by exhaustive
//! enumeration over finite-support product measures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexity::{expected_rademacher, exact_sign_average, Variant};
use crate::enumerate::{tuple_weight, ProductSpace};
use crate::error::{Error, Result};
use crate::model::DiscreteModel;
use crate::sum::deterministic_sum;
use crate::types::{Caps, EvaluatedClass};

/// Tolerance for equalities and inequalities checked by full enumeration.
pub const EXACT_TOLERANCE: f64 = 1e-10;

/// Slack on the bounded-differences cap.
pub const AUDIT_TOLERANCE: f64 = 1e-12;

/// `max_i |(1/n) sum_k evals[i][k] - population_means[i]|`.
pub fn uniform_deviation(class: &EvaluatedClass) -> Result<f64> {
    let means = class
        .population_means()
        .ok_or(Error::MissingPopulationMeans)?;
    Ok(deviation_of_rows(class.evals(), means))
}

pub(crate) fn deviation_of_rows(rows: &[Vec<f64>], means: &[f64]) -> f64 {
    let n = rows[0].len() as f64;
    rows.iter()
        .zip(means)
        .map(|(row, mu)| (row.iter().sum::<f64>() / n - mu).abs())
        .fold(0.0, f64::max)
}

// Same as deviation_of_rows, from precomputed row sums.
#[inline]
fn deviation_of_sums(sums: &[f64], means: &[f64], n: f64) -> f64 {
    sums.iter()
        .zip(means)
        .map(|(s, mu)| (s / n - mu).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationAudit {
    pub max_observed_delta: f64,
    /// `2 b / n`
    pub theoretical_cap: f64,
    pub perturbations_checked: u64,
    pub violated: bool,
}

/// Replaces every coordinate of every sample in `support^n` by every support
/// point and records the largest change in uniform deviation.
pub fn audit_bounded_difference(
    model: &DiscreteModel,
    n: usize,
    caps: &Caps,
) -> Result<DeviationAudit> {
    let s = model.support_len();
    let required = (s as f64).powi(n as i32) * n as f64 * s as f64;
    caps.check_tuples("bounded-difference perturbations", required)?;
    let space = ProductSpace::new(s, n, caps, "bounded-difference perturbations")?;
    let m = model.m();
    let nf = n as f64;
    let means = model.population_means();

    let max_delta = (0..space.total)
        .into_par_iter()
        .map_init(
            || (vec![0usize; n], vec![0.0; m], vec![0.0; m]),
            |(tuple, sums, moved), t| {
                space.decode(t, tuple);
                for (i, sum) in sums.iter_mut().enumerate() {
                    *sum = tuple.iter().map(|&j| model.value(i, j)).sum();
                }
                let base = deviation_of_sums(sums, means, nf);
                let mut worst: f64 = 0.0;
                for k in 0..n {
                    for new in 0..s {
                        for (i, mv) in moved.iter_mut().enumerate() {
                            // recomputed rather than patched so it matches a fresh evaluation
                            *mv = tuple
                                .iter()
                                .enumerate()
                                .map(|(kk, &j)| model.value(i, if kk == k { new } else { j }))
                                .sum();
                        }
                        let delta = (base - deviation_of_sums(moved, means, nf)).abs();
                        worst = worst.max(delta);
                    }
                }
                worst
            },
        )
        .reduce(|| 0.0, f64::max);

    let theoretical_cap = 2.0 * model.envelope() / nf;
    Ok(DeviationAudit {
        max_observed_delta: max_delta,
        theoretical_cap,
        perturbations_checked: space.total * n as u64 * s as u64,
        violated: max_delta > theoretical_cap + AUDIT_TOLERANCE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizationReport {
    /// `E_{S,S'} max_i |sum_k (f_i(S_k) - f_i(S'_k))|`
    pub lhs: f64,
    /// The same with every sign pattern applied to the differences, averaged.
    pub rhs: f64,
    pub abs_diff: f64,
}

/// Exact check of the ghost-sample symmetrization identity over all paired
/// samples `(S, S')` and all sign vectors.
pub fn check_symmetrization_identity(
    model: &DiscreteModel,
    n: usize,
    caps: &Caps,
) -> Result<SymmetrizationReport> {
    caps.check_signs(n)?;
    let s = model.support_len();
    let required = (s as f64).powi(2 * n as i32) * 2f64.powi(n as i32);
    caps.check_tuples("paired samples x sign vectors", required)?;
    let space = ProductSpace::new(s, 2 * n, caps, "paired samples")?;
    let m = model.m();

    let terms: Vec<(f64, f64)> = (0..space.total)
        .into_par_iter()
        .map_init(
            || (vec![0usize; 2 * n], vec![vec![0.0; n]; m]),
            |(tuple, diffs), t| {
                space.decode(t, tuple);
                let w = tuple_weight(model.probs(), tuple);
                if w == 0.0 {
                    return (0.0, 0.0);
                }
                let (first, ghost) = tuple.split_at(n);
                for (i, row) in diffs.iter_mut().enumerate() {
                    for k in 0..n {
                        row[k] = model.value(i, first[k]) - model.value(i, ghost[k]);
                    }
                }
                let plain = diffs
                    .iter()
                    .map(|row| row.iter().sum::<f64>().abs())
                    .fold(f64::NEG_INFINITY, f64::max);
                // exact_sign_average divides by n; undo it to stay on raw sums
                let signed = exact_sign_average(diffs, Variant::Abs) * n as f64;
                (w * plain, w * signed)
            },
        )
        .collect();

    let lhs = deterministic_sum(&terms.iter().map(|t| t.0).collect::<Vec<_>>());
    let rhs = deterministic_sum(&terms.iter().map(|t| t.1).collect::<Vec<_>>());
    let abs_diff = (lhs - rhs).abs();
    if abs_diff > EXACT_TOLERANCE {
        return Err(Error::InequalityViolation {
            what: "symmetrization identity".into(),
            lhs,
            rhs,
            details: model.to_json(),
        });
    }
    Ok(SymmetrizationReport { lhs, rhs, abs_diff })
}

/// `E_{S ~ dist^n}[UD(S)]` by exact enumeration.
pub fn expected_uniform_deviation(model: &DiscreteModel, n: usize, caps: &Caps) -> Result<f64> {
    let space = ProductSpace::new(model.support_len(), n, caps, "product-measure tuples")?;
    let m = model.m();
    let nf = n as f64;
    let means = model.population_means();
    let terms: Vec<f64> = (0..space.total)
        .into_par_iter()
        .map_init(
            || (vec![0usize; n], vec![0.0; m]),
            |(tuple, sums), t| {
                space.decode(t, tuple);
                let w = tuple_weight(model.probs(), tuple);
                for (i, sum) in sums.iter_mut().enumerate() {
                    *sum = tuple.iter().map(|&j| model.value(i, j)).sum();
                }
                w * deviation_of_sums(sums, means, nf)
            },
        )
        .collect();
    Ok(deterministic_sum(&terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationReport {
    /// `E[UD]`
    pub lhs: f64,
    /// `2 R_n`
    pub rhs: f64,
    /// `rhs - lhs`
    pub slack: f64,
}

pub fn verify_expectation_bound(
    model: &DiscreteModel,
    n: usize,
    caps: &Caps,
) -> Result<ExpectationReport> {
    let lhs = expected_uniform_deviation(model, n, caps)?;
    let rhs = 2.0 * expected_rademacher(model, n, caps)?.value;
    if lhs > rhs + EXACT_TOLERANCE {
        return Err(Error::InequalityViolation {
            what: "E[uniform deviation] <= 2 R_n".into(),
            lhs,
            rhs,
            details: model.to_json(),
        });
    }
    Ok(ExpectationReport {
        lhs,
        rhs,
        slack: rhs - lhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FnClass;
    use crate::types::DiscreteDistribution;

    fn identity_model(points: &[f64]) -> DiscreteModel {
        let class = FnClass::new(1, 1.0, |_, x: &[f64]| x[0]);
        let dist = DiscreteDistribution::uniform(points.iter().map(|p| vec![*p]).collect()).unwrap();
        DiscreteModel::new(&class, &dist).unwrap()
    }

    #[test]
    fn uniform_deviation_examples() {
        let c = EvaluatedClass::new(vec![vec![0.3, 0.3]], 1.0)
            .unwrap()
            .with_population_means(vec![0.3])
            .unwrap();
        assert_eq!(uniform_deviation(&c).unwrap(), 0.0);

        let c = EvaluatedClass::new(vec![vec![1.0, 1.0]], 1.0)
            .unwrap()
            .with_population_means(vec![0.5])
            .unwrap();
        assert_eq!(uniform_deviation(&c).unwrap(), 0.5);

        let c = EvaluatedClass::new(vec![vec![0.2, 0.2], vec![0.7, 0.7]], 1.0)
            .unwrap()
            .with_population_means(vec![0.0, 0.0])
            .unwrap();
        assert_eq!(uniform_deviation(&c).unwrap(), 0.7);
    }

    #[test]
    fn uniform_deviation_needs_means() {
        let c = EvaluatedClass::new(vec![vec![1.0]], 1.0).unwrap();
        assert_eq!(uniform_deviation(&c), Err(Error::MissingPopulationMeans));
    }

    #[test]
    fn audit_constant_class() {
        let model = DiscreteModel::from_table(vec![vec![0.4, 0.4, 0.4]], vec![0.2, 0.3, 0.5], 1.0)
            .unwrap();
        let a = audit_bounded_difference(&model, 3, &Caps::default()).unwrap();
        assert_eq!(a.max_observed_delta, 0.0);
        assert!(!a.violated);
        assert_eq!(a.perturbations_checked, 27 * 3 * 3);
    }

    #[test]
    fn audit_identity_on_zero_one() {
        let model = identity_model(&[0.0, 1.0]);
        let a = audit_bounded_difference(&model, 2, &Caps::default()).unwrap();
        assert_eq!(a.theoretical_cap, 1.0);
        assert_eq!(a.perturbations_checked, 4 * 2 * 2);
        assert!(!a.violated);
        // moving one point from 0 to 1 moves the mean by 1/2
        assert_eq!(a.max_observed_delta, 0.5);
    }

    #[test]
    fn audit_surfaces_understated_envelope() {
        let model = identity_model(&[-1.0, 1.0]).with_envelope_unchecked(0.1);
        let a = audit_bounded_difference(&model, 2, &Caps::default()).unwrap();
        assert!(a.violated);
        assert_eq!(a.max_observed_delta, 1.0);
    }

    #[test]
    fn symmetrization_examples() {
        let constant = DiscreteModel::from_table(vec![vec![0.5, 0.5]], vec![0.5, 0.5], 1.0).unwrap();
        let r = check_symmetrization_identity(&constant, 2, &Caps::default()).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));

        let r = check_symmetrization_identity(&identity_model(&[0.0, 1.0]), 2, &Caps::default())
            .unwrap();
        assert!(r.abs_diff <= 1e-10);
        // S - S' per coordinate is -1, 0, 0, 1 w.p. 1/4 each; E|d1 + d2| = 3/4
        assert!((r.lhs - 0.75).abs() < 1e-15);
    }

    #[test]
    fn expectation_bound_examples() {
        let constant = DiscreteModel::from_table(vec![vec![0.5, 0.5]], vec![0.5, 0.5], 1.0).unwrap();
        let r = verify_expectation_bound(&constant, 3, &Caps::default()).unwrap();
        assert_eq!(r.lhs, 0.0);
        // a nonzero constant still correlates with signs: R_3 = 0.5 * E|sum sigma| / 3 = 0.25
        assert!((r.rhs - 0.5).abs() < 1e-15);
        let zero = DiscreteModel::from_table(vec![vec![0.0, 0.0]], vec![0.5, 0.5], 1.0).unwrap();
        let r = verify_expectation_bound(&zero, 3, &Caps::default()).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));

        let r = verify_expectation_bound(&identity_model(&[-1.0, 1.0]), 2, &Caps::default()).unwrap();
        // UD = |mean|: 1 w.p. 1/2, 0 w.p. 1/2; R_2 = 0.5 for every sample
        assert_eq!(r.lhs, 0.5);
        assert_eq!(r.rhs, 1.0);
    }

    #[test]
    fn caps_are_enforced() {
        let model = identity_model(&[0.0, 0.5, 1.0]);
        let tiny = Caps {
            max_product_tuples: 100,
            ..Caps::default()
        };
        assert!(matches!(
            check_symmetrization_identity(&model, 3, &tiny),
            Err(Error::ExactEnumerationLimit { .. })
        ));
        assert!(matches!(
            audit_bounded_difference(&model, 3, &tiny),
            Err(Error::ExactEnumerationLimit { .. })
        ));
        assert!(audit_bounded_difference(&model, 2, &tiny).is_ok());
    }
}
