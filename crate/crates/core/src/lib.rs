//! Generalization bounds for finite function classes, computed exactly by
//! enumeration where feasible and estimated by seeded Monte Carlo otherwise.
//!
//! Quantities covered: empirical and expected Rademacher complexity (with and
//! without the absolute value), uniform deviation, the bounded-differences
//! constant, the McDiarmid tail bound, norm-ball linear predictor bounds, the
//! finite-class (Massart) bound, covering numbers, chaining, and the Dudley
//! entropy integral. Every inequality relating them has a verification
//! harness returning a report, or an [`Error::InequalityViolation`] carrying
//! the offending instance.

pub mod complexity;
pub mod concentration;
pub mod deviation;
pub mod entropy;
pub mod enumerate;
pub mod error;
pub mod instances;
pub mod linear;
pub mod model;
pub mod rng;
pub mod sum;
pub mod types;

pub use error::{Error, Result};
pub use types::{Caps, DiscreteDistribution, EvaluatedClass, Sample, SignAssignment};
