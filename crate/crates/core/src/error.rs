use core::fmt;

use crate::structure::Violation;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    Domain { what: &'static str, value: f64 },
    InsufficientData { needed: usize, got: usize },
    /// A column (or coordinate) with zero spread.
    Degenerate { column: Option<usize> },
    DimensionMismatch { expected: usize, got: usize },
    NonFinite { what: &'static str },
    InvalidStructure(Violation),
    /// A model assembled from parts (e.g. read from disk) is inconsistent.
    InvalidModel(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::InsufficientData { needed, got } => {
                write!(f, "insufficient data: need at least {needed} observations, got {got}")
            }
            Error::Degenerate { column: Some(c) } => write!(f, "column {c} has zero variance"),
            Error::Degenerate { column: None } => f.write_str("data has zero variance"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Error::InvalidStructure(v) => write!(f, "invalid vine structure: {v}"),
            Error::InvalidModel(msg) => write!(f, "invalid model: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
