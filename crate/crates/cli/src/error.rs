use thiserror::Error;

/// Failures of a CLI command, each with a fixed process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Divergence(roadgnn::Error),

    #[error("comparison incomplete: {failed} of {requested} models failed")]
    PartialComparison { failed: usize, requested: usize },

    #[error("{0}")]
    Core(roadgnn::Error),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::PartialComparison { .. } => 4,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<roadgnn::Error> for CliError {
    fn from(e: roadgnn::Error) -> Self {
        match e {
            roadgnn::Error::Divergence { .. } => CliError::Divergence(e),
            other => CliError::Core(other),
        }
    }
}
