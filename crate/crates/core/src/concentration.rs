//! McDiarmid tail bound for the uniform deviation and its empirical check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::complexity::ComplexityResult;
use crate::deviation::deviation_of_rows;
use crate::error::{Error, Result};
use crate::model::SampleSource;
use crate::rng::stream;

/// Confidence level of the one-sided Clopper-Pearson bounds.
pub const TAIL_CONFIDENCE: f64 = 0.99;

/// Minimum number of trials for a tail simulation.
pub const MIN_TAIL_TRIALS: usize = 1_000;

/// `exp(-eps^2 n / (2 b^2))`.
pub fn mcdiarmid_bound(epsilon: f64, n: usize, b: f64) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidEnvelope(b));
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::invalid(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    Ok((-epsilon * epsilon * n as f64 / (2.0 * b * b)).exp())
}

/// The deviation `eps` at which the tail bound equals `delta`:
/// `b sqrt(2 ln(1/delta) / n)`.
pub fn high_probability_epsilon(delta: f64, n: usize, b: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidDelta(delta));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidEnvelope(b));
    }
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    Ok(b * (2.0 * (1.0 / delta).ln() / n as f64).sqrt())
}

/// `P(Bin(trials, p) <= k)`.
fn binomial_cdf(k: u64, trials: u64, p: f64) -> f64 {
    if k >= trials || p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    beta_reg((trials - k) as f64, k as f64 + 1.0, 1.0 - p)
}

// Bisection for the root of a monotone function on [lo, hi].
fn bisect(mut lo: f64, mut hi: f64, above: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One-sided Clopper-Pearson upper bound on a binomial proportion.
pub fn clopper_pearson_upper(successes: u64, trials: u64, confidence: f64) -> f64 {
    assert!(successes <= trials && trials > 0);
    if successes == trials {
        return 1.0;
    }
    let alpha = 1.0 - confidence;
    let phat = successes as f64 / trials as f64;
    // CDF at k decreases in p; the bound is where it crosses alpha
    bisect(phat, 1.0, |p| binomial_cdf(successes, trials, p) < alpha)
}

/// One-sided Clopper-Pearson lower bound on a binomial proportion.
pub fn clopper_pearson_lower(successes: u64, trials: u64, confidence: f64) -> f64 {
    assert!(successes <= trials && trials > 0);
    if successes == 0 {
        return 0.0;
    }
    let alpha = 1.0 - confidence;
    let phat = successes as f64 / trials as f64;
    // P(X >= k) = 1 - CDF(k - 1) increases in p
    bisect(0.0, phat, |p| 1.0 - binomial_cdf(successes - 1, trials, p) > alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailExperiment {
    pub n: usize,
    pub b: f64,
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
    /// Trials with `UD >= threshold`.
    pub exceed_count: u64,
    pub empirical_freq: f64,
    /// 99% one-sided upper bound on the exceedance probability.
    pub ci_upper: f64,
    /// 99% one-sided lower bound on the exceedance probability.
    pub ci_lower: f64,
    pub theoretical: f64,
    /// `2 R_n + eps`
    pub threshold: f64,
    /// The complexity value fed in, with its provenance.
    pub rademacher: ComplexityResult,
}

/// Draws `trials` samples of size `n` and counts `UD >= 2 R_n + eps`.
///
/// `rademacher` is fixed for the whole experiment; trial `t` uses the random
/// stream `(seed, t)`.
pub fn simulate_tail<S: SampleSource + ?Sized>(
    source: &S,
    n: usize,
    epsilon: f64,
    trials: usize,
    seed: u64,
    rademacher: ComplexityResult,
) -> Result<TailExperiment> {
    if trials < MIN_TAIL_TRIALS {
        return Err(Error::invalid(format!(
            "tail simulation needs at least {MIN_TAIL_TRIALS} trials, got {trials}"
        )));
    }
    let b = source.envelope();
    let theoretical = mcdiarmid_bound(epsilon, n, b)?;
    let threshold = 2.0 * rademacher.value + epsilon;

    let exceed_count: u64 = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, t);
            let class = source.draw(n, &mut rng);
            let means = class
                .population_means()
                .expect("sample sources attach population means");
            u64::from(deviation_of_rows(class.evals(), means) >= threshold)
        })
        .sum();

    let trials = trials as u64;
    Ok(TailExperiment {
        n,
        b,
        epsilon,
        trials,
        seed,
        exceed_count,
        empirical_freq: exceed_count as f64 / trials as f64,
        ci_upper: clopper_pearson_upper(exceed_count, trials, TAIL_CONFIDENCE),
        ci_lower: clopper_pearson_lower(exceed_count, trials, TAIL_CONFIDENCE),
        theoretical,
        threshold,
        rademacher,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailVerdict {
    pub pass: bool,
    pub empirical_freq: f64,
    pub theoretical: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub exceed_count: u64,
    pub trials: u64,
}

/// Fails only on a statistically significant exceedance: the 99% lower
/// confidence bound of the frequency lies above the theoretical bound.
pub fn verify_tail_bound(exp: &TailExperiment) -> TailVerdict {
    let ci_lower = clopper_pearson_lower(exp.exceed_count, exp.trials, TAIL_CONFIDENCE);
    let pass = exp.empirical_freq <= exp.theoretical || ci_lower <= exp.theoretical;
    TailVerdict {
        pass,
        empirical_freq: exp.empirical_freq,
        theoretical: exp.theoretical,
        ci_lower,
        ci_upper: exp.ci_upper,
        exceed_count: exp.exceed_count,
        trials: exp.trials,
    }
}
