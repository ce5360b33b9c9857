//! Experiment front end behind the `spgd` binary.
//!
//! * [`config`]: the TOML experiment file and its resolution into runs.
//! * [`run`]: `spgd solve`, writing CSV traces and a summary.
//! * [`check`]: `spgd check`, the verification suites.

pub mod check;
pub mod config;
pub mod run;

use std::fmt;

pub use check::{run_check, CheckName, CheckOptions, CheckReport};
pub use config::{ExperimentConfig, Overrides};
pub use run::{run_solve, RunSummary};

/// CSV trace header, in column order.
pub const TRACE_HEADER: [&str; 6] = ["t", "eta", "objective", "rank", "grad_sq_norm", "dist_to_ref"];

/// Failure of a CLI operation, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, malformed config, unwritable paths. Exit code 1.
    Usage(String),
    /// The solver aborted on a numerical condition. Exit code 2.
    Numerical(crate::Error),
    /// A verification check ran and failed. Exit code 3.
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::CheckFailed(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "error: {msg}"),
            CliError::Numerical(e) => write!(f, "numerical abort: {e}"),
            CliError::CheckFailed(msg) => write!(f, "check failed: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        if e.is_numerical_abort() {
            CliError::Numerical(e)
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// At least 12 significant digits, as the trace schema requires.
pub(crate) fn fmt_float(x: f64) -> String {
    format!("{x:.15e}")
}
