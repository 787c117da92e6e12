use decolab_core::Error as CoreError;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input files, unknown metrics.
    #[error("input error: {0}")]
    Input(String),

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    /// One or more expected metrics fell outside their tolerance.
    #[error("{0} metric(s) failed")]
    MetricFailure(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MetricFailure(_) => 1,
            CliError::Input(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NonConvergence(_) | CoreError::GridTooCoarse { .. } => CliError::NonConvergence(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
