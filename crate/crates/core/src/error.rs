use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A complex continuation was requested outside its analyticity strip.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid basis size: {0}")]
    InvalidSize(String),

    /// The dense eigensolver did not converge; carries the indices of the
    /// eigenpairs that could not be certified.
    #[error("eigensolver did not converge for {} eigenvalue(s)", unconverged.len())]
    NoConvergence { unconverged: Vec<usize> },

    #[error("not-found: {0}")]
    NotFound(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Aggregated configuration diagnostics, one entry per violated constraint.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("config parse error at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("malformed row {row}: {msg}")]
    MalformedRow { row: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
