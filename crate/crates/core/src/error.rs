use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("sort error at {line}:{col}: {msg}")]
    Sort { line: usize, col: usize, msg: String },

    #[error("weights must be non-negative and sum to 1, got {0}")]
    Weights(String),

    #[error("free names {missing} are not in the name set")]
    NamesNotCovered { missing: String },

    #[error("weak moves are only defined here for tau and output actions, got {0}")]
    InputAction(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
