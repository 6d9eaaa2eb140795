//! Command-line front end: configuration loading, command dispatch and run
//! reports for the `nsreg` binary.

pub mod commands;
pub mod config;
pub mod report;

use thiserror::Error;

/// Environment variable naming the directory that relative output paths are
/// resolved against.
pub const OUTPUT_ROOT_VAR: &str = "NSREG_OUTPUT_ROOT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] nsreg::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 2 for bad input, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        use nsreg::Error as E;
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(
                E::InvalidGrid(_)
                | E::InvalidTimeGrid(_)
                | E::ExponentOutOfRange(_)
                | E::InvalidArgument(_)
                | E::BallOutOfRange(_)
                | E::TimeGridTooCoarse(_)
                | E::NonFiniteSample { .. },
            ) => 2,
            _ => 1,
        }
    }
}
