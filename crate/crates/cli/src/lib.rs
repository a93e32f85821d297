//! Batch runner for generalization-bound experiments.
//!
//! A JSON [`ExperimentConfig`] names a command and an instance source; [`run`]
//! evaluates it with `genbound-core` and returns a [`Report`] whose
//! `violations` list every inequality that failed.

pub mod config;
pub mod curve;
pub mod error;
pub mod instance;
pub mod report;
pub mod runner;

pub use config::{Command, ExperimentConfig, Format};
pub use curve::emit_curve;
pub use error::CliError;
pub use report::{canonicalize, Report, Violation};
pub use runner::run;
