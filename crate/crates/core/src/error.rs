use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by every solver and the scenario layer.
#[derive(Debug, Error)]
pub enum Error {
    /// An evaluation was requested outside a function's domain
    /// (negative or non-finite resource, invalid probability, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Power precision with `alpha < 1` has unbounded slope at `r = 0`.
    #[error("derivative singularity: power precision with alpha < 1 at r = 0")]
    DerivativeSingularity,

    /// Every source has infinite loss; nothing can be aggregated.
    #[error("no usable source: every loss is infinite")]
    NoInformation,

    /// A coordinate is estimated by no source (or only by unusable ones).
    #[error("coordinate index {coord} is unobservable: {reason}")]
    UnobservableCoordinate { coord: usize, reason: String },

    #[error("infeasible constraint: {0}")]
    Infeasible(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is rank-deficient or not positive definite")]
    RankDeficient,

    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// The scenario file is not syntactically valid JSON (or CSV).
    #[error("malformed scenario file: {0}")]
    Syntax(String),

    /// The file parses but does not match the scenario schema.
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    /// The file matches the schema but describes an invalid problem.
    #[error("invalid scenario at `{path}`: {message}")]
    Semantic { path: String, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn semantic(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Semantic {
            path: path.into(),
            message: msg.into(),
        }
    }
}
