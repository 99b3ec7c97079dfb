use std::fmt;

/// Errors shared across the library.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Input violated a precondition (non-finite coordinate, empty set, bad range...).
    InvalidInput(String),
    /// A handle referred to an element that is no longer stored.
    InvalidHandle,
    /// A caller broke an operation contract (e.g. restricted search outside its slab).
    ContractViolation(String),
    /// Input too degenerate for the requested construction.
    DegenerateInput(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::InvalidHandle => write!(f, "invalid handle"),
            Error::ContractViolation(msg) => write!(f, "contract violation: {msg}"),
            Error::DegenerateInput(msg) => write!(f, "degenerate input: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
