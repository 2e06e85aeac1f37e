use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid drift set: {0}")]
    InvalidDrifts(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// Coupling precondition `lower(x) <= upper(x)` failed at `site`.
    #[error("environments are not ordered at site {site}: lower {lower} > upper {upper}")]
    OrderViolation {
        site: i64,
        lower: String,
        upper: String,
    },

    /// Two independent computations of the same exact quantity disagreed.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
