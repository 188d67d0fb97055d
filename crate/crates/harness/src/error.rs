use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// A configuration problem, located at a line of the config file when possible.
    #[error("{origin}{}: {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Validation {
        origin: String,
        line: Option<usize>,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] cbp_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl HarnessError {
    /// Process exit code: 1 for bad input, 2 for numeric failures, 3 for a
    /// violated invariant.
    pub fn exit_code(&self) -> i32 {
        use cbp_core::Error as E;
        match self {
            HarnessError::Core(E::Overflow(_) | E::Numeric(_) | E::TruncationInsufficient { .. }) => 2,
            HarnessError::Core(E::InvariantViolation(_)) => 3,
            _ => 1,
        }
    }
}
