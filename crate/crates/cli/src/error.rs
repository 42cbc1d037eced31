use std::process::ExitCode;

use gibbs_spectra::Error as LibError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error(transparent)]
    Library(#[from] LibError),

    #[error("Gibbs inequality violated: observed ratios [{observed_min}, {observed_max}] leave [1/C, C] with C = {constant}")]
    AuditViolation {
        constant: f64,
        observed_min: f64,
        observed_max: f64,
    },
}

impl CliError {
    /// 2 for unusable input, 3 for numerical failure, 4 for a failed audit,
    /// 5 for exhausted resource caps.
    pub fn exit_code(&self) -> ExitCode {
        let code = match self {
            CliError::Read { .. } | CliError::Model(_) | CliError::Argument(_) => 2,
            CliError::Write { .. } => 1,
            CliError::AuditViolation { .. } => 4,
            CliError::Library(e) => match e {
                LibError::NonConvergence { .. }
                | LibError::SingularSystem
                | LibError::SolverFailure { .. } => 3,
                LibError::EnumerationCap { .. } => 5,
                _ => 2,
            },
        };
        ExitCode::from(code)
    }
}
