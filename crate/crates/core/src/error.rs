//! Crate-wide error type.

use thiserror::Error;

/// Coarse classification used by callers that map failures to exit codes:
/// problems with the input data versus failures of the numerical machinery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad or unusable input (missing files, unparsable values, invalid designs).
    Data,
    /// The computation itself failed (degenerate variances, non-convergence).
    Numerical,
}

/// Errors produced by any part of the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("column '{column}' not found in header (available: {available})")]
    MissingColumn { column: String, available: String },

    #[error("row {row}: cannot parse '{value}' in column '{column}' as a number")]
    ParseValue {
        row: usize,
        column: String,
        value: String,
    },

    #[error("empty cell in crossed layout: lab '{lab}', dose '{dose}'")]
    EmptyCell { lab: String, dose: String },

    #[error("row {row}: {transform} transform undefined for response {value}")]
    TransformDomain {
        row: usize,
        transform: String,
        value: f64,
    },

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("residual degrees of freedom {df} (need N > number of cells)")]
    NonPositiveDf { df: i64 },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("correlation matrix is not positive semidefinite: {0}")]
    NonPsd(String),

    #[error("root finder did not converge: {0}")]
    NonConvergence(String),

    #[error("cannot parse contrast label '{0}'")]
    BadLabel(String),

    #[error("malformed report: {0}")]
    BadReport(String),
}

impl Error {
    /// Which exit-code class this error belongs to.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. }
            | Error::Csv { .. }
            | Error::MissingColumn { .. }
            | Error::ParseValue { .. }
            | Error::EmptyCell { .. }
            | Error::TransformDomain { .. }
            | Error::InvalidDesign(_)
            | Error::InvalidConfig(_)
            | Error::BadLabel(_)
            | Error::BadReport(_) => ErrorClass::Data,
            Error::NonPositiveDf { .. }
            | Error::DegenerateVariance(_)
            | Error::NonPsd(_)
            | Error::NonConvergence(_) => ErrorClass::Numerical,
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
