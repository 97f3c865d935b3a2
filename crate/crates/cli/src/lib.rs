//! Command-line driver for `tmlab`: configuration, argument parsing, run
//! orchestration and result emission.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

pub use args::parse_args;
pub use commands::run;
pub use config::{Command, MeshSource, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or config; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// `--help` or `--version`; printed to stdout, exit code 0.
    #[error("{0}")]
    Help(String),
    /// Solver failure or an unmet numerical contract; exit code 1.
    #[error(transparent)]
    Numerical(#[from] tmlab::Error),
    /// The run finished but its result failed a check; exit code 1.
    #[error("{0}")]
    Failed(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn message(&self) -> String {
        self.to_string()
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Help(_) => 0,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Failed(_) | CliError::Io { .. } => 1,
        }
    }
}
