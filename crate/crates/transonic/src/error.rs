use std::path::PathBuf;

use transonic_core::subsonic::SolveFailure;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("{0}")]
    Parse(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Solver(#[from] transonic_core::Error),

    #[error("subsonic iteration failed after {} iterations: {}", .0.report.iterations(), .0.error)]
    Iteration(Box<SolveFailure>),

    #[error("output error: {0}")]
    Output(String),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 for solver
    /// failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse(_) | HarnessError::Validation(_) => 2,
            HarnessError::Solver(_) | HarnessError::Iteration(_) => 3,
            HarnessError::Read { .. } | HarnessError::Write { .. } | HarnessError::Output(_) => 1,
        }
    }
}

impl From<SolveFailure> for HarnessError {
    fn from(f: SolveFailure) -> Self {
        HarnessError::Iteration(Box::new(f))
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Output(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
