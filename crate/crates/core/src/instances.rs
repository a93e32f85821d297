//! Seeded random instance generators for property suites and the CLI.

use rand::Rng;

use crate::error::Result;
use crate::model::DiscreteModel;
use crate::rng::stream;
use crate::types::EvaluatedClass;

/// `m x n` class with entries uniform in `[-envelope, envelope]`.
pub fn random_class(seed: u64, m: usize, n: usize, envelope: f64) -> Result<EvaluatedClass> {
    let mut rng = stream(seed, 0);
    let evals = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| envelope * rng.random_range(-1.0..=1.0))
                .collect()
        })
        .collect();
    EvaluatedClass::new(evals, envelope)
}

/// Class tabulated on `support` points with random positive probabilities.
pub fn random_model(seed: u64, m: usize, support: usize, envelope: f64) -> Result<DiscreteModel> {
    let mut rng = stream(seed, 1);
    let table = (0..m)
        .map(|_| {
            (0..support)
                .map(|_| envelope * rng.random_range(-1.0..=1.0))
                .collect()
        })
        .collect();
    let raw: Vec<f64> = (0..support).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let probs = raw.iter().map(|p| p / total).collect();
    DiscreteModel::from_table(table, probs, envelope)
}
