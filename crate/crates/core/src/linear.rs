//! Norm-constrained linear predictors: closed-form complexity bounds, the
//! finite-class (Massart) bound, ball samplers and verification harnesses.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::complexity::empirical_rademacher;
use crate::deviation::EXACT_TOLERANCE;
use crate::error::{Error, Result};
use crate::model::{dot, gaussian_direction};
use crate::rng::stream;
use crate::types::{Caps, EvaluatedClass};

/// Slack for norm-ball membership checks.
pub const NORM_SLACK: f64 = 1e-12;

/// `X W / sqrt(n)`.
pub fn l2_bound(x: f64, w: f64, n: usize) -> f64 {
    x * w / (n as f64).sqrt()
}

/// `(X_inf W / sqrt(n)) sqrt(2 ln(2d))`.
pub fn l1_bound(x_inf: f64, w: f64, n: usize, d: usize) -> f64 {
    (x_inf * w / (n as f64).sqrt()) * (2.0 * (2.0 * d as f64).ln()).sqrt()
}

/// `(1/n) max_i ||evals[i]||_2 sqrt(2 ln m)`; bounds the without-abs
/// complexity of any finite class.
pub fn massart_bound(class: &EvaluatedClass) -> f64 {
    let max_norm = class
        .evals()
        .iter()
        .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    max_norm * (2.0 * (class.m() as f64).ln()).sqrt() / class.n() as f64
}

/// Massart bound for the absolute-value complexity, via the class closed
/// under negation (`2m` rows).
pub fn massart_bound_abs(class: &EvaluatedClass) -> f64 {
    massart_bound(&class.with_negations())
}

/// `max_{j, s = +-1} <s W e_j, z>`, which equals `W ||z||_inf`.
pub fn l1_dual_max(z: &[f64], w: f64) -> f64 {
    z.iter()
        .flat_map(|zj| [w * zj, -w * zj])
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn linf_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ball {
    L1,
    L2,
    Linf,
}

impl Ball {
    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            Ball::L1 => l1_norm(v),
            Ball::L2 => l2_norm(v),
            Ball::Linf => linf_norm(v),
        }
    }
}

// Pulls a point back inside the ball if rounding pushed it just outside.
fn clamp_to_ball(mut v: Vec<f64>, ball: Ball, radius: f64) -> Vec<f64> {
    let norm = ball.norm(&v);
    if norm > radius {
        let scale = radius / norm;
        v.iter_mut().for_each(|x| *x = (*x * scale).clamp(-radius, radius));
        while ball.norm(&v) > radius {
            v.iter_mut().for_each(|x| *x *= 1.0 - f64::EPSILON);
        }
    }
    v
}

fn sample_one(ball: Ball, radius: f64, d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if radius == 0.0 {
        return vec![0.0; d];
    }
    let v = match ball {
        Ball::L2 => {
            let dir = gaussian_direction(d, rng);
            let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
            dir.into_iter().map(|x| x * r).collect()
        }
        Ball::L1 => {
            let e: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
            let total: f64 = e.iter().sum();
            let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
            e.into_iter()
                .map(|x| {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    sign * r * x / total
                })
                .collect()
        }
        Ball::Linf => (0..d)
            .map(|_| radius * (2.0 * rng.random::<f64>() - 1.0))
            .collect(),
    };
    clamp_to_ball(v, ball, radius)
}

/// `count` points from the given ball in `R^d`; vector `i` uses the stream
/// `(seed, i)`.
pub fn sample_ball(ball: Ball, radius: f64, d: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("radius must be nonnegative, got {radius}")));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok((0..count as u64)
        .map(|i| sample_one(ball, radius, d, &mut stream(seed, i)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormRegime {
    /// `||w||_2 <= w`, `||x||_2 <= x`.
    L2Ball { w: f64, x: f64 },
    /// `||w||_1 <= w`, `||x||_inf <= x_inf`.
    L1Linf { w: f64, x_inf: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearInstance {
    pub d: usize,
    pub weights: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub regime: NormRegime,
}

impl LinearInstance {
    pub fn new(weights: Vec<Vec<f64>>, inputs: Vec<Vec<f64>>, regime: NormRegime) -> Result<Self> {
        if weights.is_empty() || inputs.is_empty() {
            return Err(Error::invalid("need at least one weight and one input"));
        }
        let d = weights[0].len();
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if let Some(v) = weights.iter().chain(&inputs).find(|v| v.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
        let (wball, wr, xball, xr) = match regime {
            NormRegime::L2Ball { w, x } => (Ball::L2, w, Ball::L2, x),
            NormRegime::L1Linf { w, x_inf } => (Ball::L1, w, Ball::Linf, x_inf),
        };
        if let Some(v) = weights.iter().find(|v| wball.norm(v) > wr + NORM_SLACK) {
            return Err(Error::invalid(format!(
                "weight norm {} exceeds radius {wr}",
                wball.norm(v)
            )));
        }
        if let Some(v) = inputs.iter().find(|v| xball.norm(v) > xr + NORM_SLACK) {
            return Err(Error::invalid(format!(
                "input norm {} exceeds radius {xr}",
                xball.norm(v)
            )));
        }
        Ok(LinearInstance {
            d,
            weights,
            inputs,
            regime,
        })
    }

    /// Random instance with weights and inputs drawn from the regime's balls.
    pub fn sample(regime: NormRegime, d: usize, m: usize, n: usize, seed: u64) -> Result<Self> {
        let (wball, wr, xball, xr) = match regime {
            NormRegime::L2Ball { w, x } => (Ball::L2, w, Ball::L2, x),
            NormRegime::L1Linf { w, x_inf } => (Ball::L1, w, Ball::Linf, x_inf),
        };
        let weights = sample_ball(wball, wr, d, m, crate::rng::derive_seed(seed, 1))?;
        let inputs = sample_ball(xball, xr, d, n, crate::rng::derive_seed(seed, 2))?;
        Self::new(weights, inputs, regime)
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }

    /// `evals[i][k] = <w_i, x_k>` with the envelope `W * X` (Cauchy-Schwarz
    /// or Hoelder, depending on the regime).
    pub fn evaluated_class(&self) -> Result<EvaluatedClass> {
        let envelope = match self.regime {
            NormRegime::L2Ball { w, x } => w * x,
            NormRegime::L1Linf { w, x_inf } => w * x_inf,
        };
        let evals = self
            .weights
            .iter()
            .map(|w| self.inputs.iter().map(|x| dot(w, x)).collect())
            .collect();
        EvaluatedClass::new(evals, envelope + 2.0 * NORM_SLACK * (1.0 + envelope))
    }

    pub fn bound(&self) -> f64 {
        match self.regime {
            NormRegime::L2Ball { w, x } => l2_bound(x, w, self.n()),
            NormRegime::L1Linf { w, x_inf } => l1_bound(x_inf, w, self.n(), self.d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearReport {
    pub exact: f64,
    pub bound: f64,
    /// `bound - exact`
    pub slack: f64,
}

/// Exact empirical complexity of the finite linear class against the
/// regime's closed-form bound.
pub fn verify_linear_bound(instance: &LinearInstance, caps: &Caps) -> Result<LinearReport> {
    let class = instance.evaluated_class()?;
    let exact = empirical_rademacher(&class, caps)?.value;
    let bound = instance.bound();
    if exact > bound + EXACT_TOLERANCE {
        return Err(Error::InequalityViolation {
            what: "linear predictor complexity bound".into(),
            lhs: exact,
            rhs: bound,
            details: serde_json::to_string(instance).unwrap_or_default(),
        });
    }
    Ok(LinearReport {
        exact,
        bound,
        slack: bound - exact,
    })
}
