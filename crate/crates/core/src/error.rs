use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar parameter is outside its valid range.
    #[error("invalid {name} = {value}: expected {expected}")]
    InvalidParameter { name: &'static str, value: String, expected: &'static str },

    #[error("tree size overflow: {k}^{n} does not fit in 64 bits")]
    Overflow { k: u32, n: u32 },

    #[error("invalid label {label}: {reason}")]
    InvalidLabel { label: String, reason: &'static str },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    /// The error-correction target cannot be met because the physical error
    /// rate is at or above threshold.
    #[error("no threshold regime: epsilon = {epsilon} >= epsilon_th = {epsilon_th}")]
    NoThreshold { epsilon: f64, epsilon_th: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("covering table: {0}")]
    CoveringTable(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: impl ToString, expected: &'static str) -> Self {
        Error::InvalidParameter { name, value: value.to_string(), expected }
    }
}
