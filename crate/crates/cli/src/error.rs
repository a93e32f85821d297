use thiserror::Error;

/// Failures that abort a run (exit code 1). Verified inequalities that fail
/// are not errors; they are recorded as report violations.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] genbound_core::Error),

    #[error("cannot emit a curve from mixed report kinds: {0} and {1}")]
    MixedReports(&'static str, &'static str),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
