use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension {n} exceeds the limit of {limit}")]
    DimensionTooLarge { n: usize, limit: usize },

    #[error("table length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("support of size {size} exceeds the enumeration limit of {limit}")]
    SupportTooLarge { size: usize, limit: usize },

    #[error("empty support")]
    EmptySupport,

    #[error("constant term must be zero, found {0}")]
    NonZeroConstant(f64),

    #[error("invalid multi-index: {0}")]
    InvalidIndex(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid parameter `{name}`: {msg}")]
    InvalidParameter { name: &'static str, msg: String },

    #[error("input is not centered: mean {0:e}")]
    NotCentered(f64),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("linear system is singular even with ridge {ridge:e}")]
    Singular { ridge: f64 },

    #[error("{0} did not converge")]
    NotConverged(&'static str),

    #[error("value {value} outside the domain {domain}")]
    OutOfDomain { value: f64, domain: &'static str },

    #[error("not in the Orlicz space: no scale up to {0:e} has Phi-expectation <= 1")]
    NotInOrliczSpace(f64),

    #[error("estimator requires a singleton basis")]
    IncompatibleEstimator,

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            msg: msg.into(),
        }
    }
}
