//! Crate-wide error type and result alias.

use crate::dist::Family;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter or configuration value is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A field in an input file did not parse as a nonnegative integer count.
    #[error("{path}:{line}: cannot parse count: {reason}")]
    Parse {
        path: String,
        line: u64,
        reason: String,
    },

    /// A count column contained a negative value.
    #[error("{path}:{line}: negative count {value}")]
    NegativeCount { path: String, line: u64, value: i64 },

    /// The requested column name was not found in the file's header row.
    #[error("{path}: column {name:?} not found (header: {header:?})")]
    ColumnNotFound {
        path: String,
        name: String,
        header: Vec<String>,
    },

    /// A multi-column file was given without saying which column holds counts.
    #[error("{path}: file has {ncols} columns; select one with a column name")]
    AmbiguousColumns { path: String, ncols: usize },

    /// The input data is unusable for the requested computation.
    #[error("unusable data: {0}")]
    Data(String),

    /// Numerical optimization failed on every start.
    #[error("{family} fit did not converge: {detail}")]
    Convergence { family: Family, detail: String },

    /// The calibration target cannot be bracketed by any admissible L.
    #[error(
        "target ARL {target} not reachable for L in [{lo}, {hi}]: \
         ARL({lo}) = {arl_lo:.2}, ARL({hi}) = {arl_hi:.2}"
    )]
    Bracket {
        target: f64,
        lo: f64,
        hi: f64,
        arl_lo: f64,
        arl_hi: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Malformed CSV structure (quoting, record shape) in an input file.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 usage, 2 data, 3 convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) => 1,
            Error::Parse { .. }
            | Error::NegativeCount { .. }
            | Error::ColumnNotFound { .. }
            | Error::AmbiguousColumns { .. }
            | Error::Data(_)
            | Error::Io(_)
            | Error::Csv(_) => 2,
            Error::Convergence { .. } | Error::Bracket { .. } => 3,
        }
    }
}
