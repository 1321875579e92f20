use thiserror::Error;

#[derive(Debug, Error)]
pub enum GofError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("spline kernel input {0} lies outside [0, 1]")]
    OutOfDomain(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate bandwidth: all pooled points are identical")]
    DegenerateBandwidth,

    #[error("{what} needs at least {min} points, got {got}")]
    TooFewSamples {
        what: &'static str,
        min: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric (max deviation {0:e})")]
    Asymmetric(f64),

    #[error("eigenvalue {0:e} is negative beyond tolerance")]
    NegativeEigenvalue(f64),

    #[error("no closed-form mean embedding for {0}")]
    MissingClosedForm(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GofError>;

pub(crate) fn invalid(msg: impl Into<String>) -> GofError {
    GofError::InvalidParameter(msg.into())
}
