use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("input contains no rows")]
    Empty,

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("size guard exceeded: {0}")]
    TooLarge(String),

    #[error("all coefficients are zero")]
    ZeroVector,

    #[error("payoff matrix is not antisymmetric")]
    NotAntisymmetric,

    #[error("degenerate reduction: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
