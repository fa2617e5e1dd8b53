//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The oracle was asked for an entry it does not store (file-backed or finite operators).
    #[error("entry ({i}, {j}) is outside the stored range")]
    OutOfStoredRange { i: usize, j: usize },
    /// The operator lacks a class flag or metadata the routine needs.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// An argument is outside the routine's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Overflow, degenerate grids and similar numerical trouble.
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
