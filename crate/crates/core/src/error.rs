use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid horizon {horizon}: below endpoint {endpoint}")]
    InvalidHorizon { horizon: String, endpoint: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("schema error: {0}")]
    Schema(String),

    /// A key attribute holds an annotated null. Keys are required to be
    /// null-free, so this is reported instead of running the tkc round.
    #[error("null in key position of {relation}: {fact}")]
    KeyNull { relation: String, fact: String },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("malformed instance: {0}")]
    Format(String),
}

/// Error from the mapping language front end, located in the source text.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}
