use std::path::PathBuf;

use thiserror::Error;

/// Process exit code for bad configuration or input.
pub const EXIT_CONFIG: i32 = 2;
/// Process exit code for failures of the computation itself.
pub const EXIT_COMPUTE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    ReadInput {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    WriteOutput {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Compute(String),
    #[error(transparent)]
    Core(#[from] dcs_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use dcs_core::Error as E;
        match self {
            CliError::Config(_) | CliError::ReadInput { .. } => EXIT_CONFIG,
            CliError::WriteOutput { .. } | CliError::Compute(_) => EXIT_COMPUTE,
            CliError::Core(e) => match e {
                E::Numerical { .. } | E::NoConvergence { .. } | E::EmptyResult | E::UndefinedMetric(_) => {
                    EXIT_COMPUTE
                }
                _ => EXIT_CONFIG,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
