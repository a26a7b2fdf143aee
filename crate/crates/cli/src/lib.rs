//! Command-line front end for `qamean`: orbit traces, ratio limits,
//! invariant means, class checks and seeded verification suites.

pub mod args;
pub mod job;
pub mod output;
pub mod run;
pub mod suites;

pub use job::{Format, JobSpec};
pub use run::{run, Command, Outcome};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const DEGENERATE: i32 = 3;
    pub const MAX_ITERS: i32 = 4;
    pub const PRECISION_FLOOR: i32 = 5;
    pub const VERIFY_FAILED: i32 = 6;
    pub const NUMERICAL: i32 = 7;
    pub const IO: i32 = 8;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] qamean::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use qamean::Error as E;
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io(_) => exit::IO,
            CliError::Core(e) => match e {
                E::Parse { .. } | E::Spec(_) | E::InvalidConfig(_) => exit::USAGE,
                E::DegenerateProcess { .. } => exit::DEGENERATE,
                E::NonConvergence { .. } => exit::MAX_ITERS,
                E::Domain(_)
                | E::Bracket(_)
                | E::Class(_)
                | E::CrossCheckMismatch(_)
                | E::InsufficientData(_)
                | E::DegenerateInput(_) => exit::NUMERICAL,
            },
        }
    }
}
