use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the command-line tool.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed network file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid network: {0}")]
    Invalid(mpe_core::Error),
    #[error("{0}")]
    Query(String),
}

impl CliError {
    /// 2 for anything wrong with the network file, 3 for a bad query.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse(_) | CliError::Invalid(_) => 2,
            CliError::Query(_) => 3,
        }
    }
}
