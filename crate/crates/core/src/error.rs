use thiserror::Error;

/// Errors produced by the discretization and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),

    #[error("singular stage matrix at index {index} (S_ii = {s_ii}, T_ii = {t_ii})")]
    SingularStage {
        index: usize,
        s_ii: num_complex::Complex64,
        t_ii: num_complex::Complex64,
    },

    #[error("problem size {size} exceeds dense cap {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("time interval {interval}: {source}")]
    Interval {
        interval: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
