//! Run reports and their canonical serialization.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{Command, ExperimentConfig};
use crate::curve::CurvePoint;

/// A failed check recorded in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Index of the sub-run within a suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<usize>,
    pub what: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lhs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<f64>,
    pub details: String,
}

impl Violation {
    /// Converts verification failures from the core library; other errors
    /// are handed back.
    pub fn from_core(
        err: genbound_core::Error,
        instance: usize,
    ) -> Result<Self, genbound_core::Error> {
        match err {
            genbound_core::Error::InequalityViolation {
                what,
                lhs,
                rhs,
                details,
            } => Ok(Violation {
                run: None,
                instance: Some(instance),
                what,
                lhs: Some(lhs),
                rhs: Some(rhs),
                details,
            }),
            genbound_core::Error::InvariantViolation { what, details } => Ok(Violation {
                run: None,
                instance: Some(instance),
                what,
                lhs: None,
                rhs: None,
                details,
            }),
            other => Err(other),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub seed: Option<u64>,
    pub command: Command,
    /// The fully resolved config; running it again reproduces the report.
    pub config: ExperimentConfig,
    pub results: Vec<Value>,
    pub violations: Vec<Violation>,
    pub wall_ms: u64,
    #[serde(skip)]
    pub curve: Vec<CurvePoint>,
    /// Sub-reports of a suite.
    #[serde(skip)]
    pub runs: Vec<Report>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            2
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// The report without its timing field, for reproducibility checks.
    pub fn canonical_json(&self) -> String {
        canonicalize(&self.to_json())
    }
}

/// Strips `wall_ms` from a serialized report.
pub fn canonicalize(report_json: &str) -> String {
    let mut v: Value = serde_json::from_str(report_json).expect("valid report json");
    if let Value::Object(map) = &mut v {
        map.remove("wall_ms");
    }
    serde_json::to_string_pretty(&v).expect("json value serializes")
}

/// SHA-256 of the config's compact JSON, as lowercase hex.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("configs serialize");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
