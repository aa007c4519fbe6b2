use std::path::PathBuf;

use antiplane_core::Error as CoreError;

/// Everything the front end can fail with, mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Input(CoreError),
    #[error("solver failure: {0}")]
    Solver(CoreError),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("interrupted after step {step}; partial output kept")]
    Interrupted { step: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Parse { .. } | CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Interrupted { .. } => 130,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Mesh and material problems are input errors; anything later is the solver's.
pub(crate) fn input(e: CoreError) -> CliError {
    CliError::Input(e)
}

pub(crate) fn solver(e: CoreError) -> CliError {
    CliError::Solver(e)
}
