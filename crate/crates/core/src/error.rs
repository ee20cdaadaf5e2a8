use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is outside the domain of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Model parameters failed validation; every violated invariant is listed.
    #[error("invalid model parameters: {}", join_diagnostics(.0))]
    InvalidParams(Vec<crate::params::Diagnostic>),

    #[error("empty sample")]
    EmptySample,

    /// The regression design matrix does not have full column rank.
    #[error("degenerate regression: {0}")]
    Degenerate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Input rows that violate the fund-month schema.
    #[error("schema violation in {} row(s): {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Schema(Vec<crate::calibrate::panel::SchemaViolation>),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_diagnostics(d: &[crate::params::Diagnostic]) -> String {
    d.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
