use alloc::string::String;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// An iterative procedure (quadrature refinement, root polish, orbit)
    /// exhausted its budget.
    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },

    /// A point fell outside the domain of a function, or an evaluation
    /// produced a non-finite value.
    #[error("domain error: {0}")]
    Domain(String),

    /// The target value of a monotone inversion is not bracketed.
    #[error("bracket error: {0}")]
    Bracket(String),

    /// A generator descriptor that violates `f' != 0` or another
    /// construction requirement.
    #[error("invalid generator: {0}")]
    Spec(String),

    /// A function class hypothesis (such as `sup |A_f| <= K`) fails.
    #[error("class hypothesis violated: {0}")]
    Class(String),

    /// Two independent computations of the same quantity disagree.
    #[error("cross-check mismatch: {0}")]
    CrossCheckMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The orbit became exactly constant from a nonconstant start.
    #[error("iteration process is degenerate (orbit constant after step {step})")]
    DegenerateProcess { step: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Descriptor or decimal syntax error; `position` is a byte offset.
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = core::result::Result<T, Error>;
