use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A caller-supplied value is malformed (bad arity, bad table, wrong tuple length).
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("function `{name}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    /// The input violates a documented precondition of the operation.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The formula uses a connective or temporal operator outside the fragment.
    #[error("formula outside fragment: {0}")]
    FragmentViolation(String),

    /// A configured work limit was exceeded.
    #[error("work limit exceeded: {0}")]
    Resource(String),

    /// An internal consistency check failed. Always a bug.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    /// A bounded search ran out of budget; says nothing about existence.
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
