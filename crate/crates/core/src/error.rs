use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {0} outside [0, 1]")]
    Domain(f64),

    #[error("value {value} exceeds the full value {max} of the curve")]
    Unattainable { value: f64, max: f64 },

    #[error("invalid valuation: {0}")]
    InvalidValuation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid flow: {0}")]
    InvalidFlow(String),

    #[error("linear program is {0}")]
    Lp(String),

    #[error("marginals cannot be realized by any lottery over feasible outcomes")]
    NotDerandomizable,

    #[error("problem too large: {0}")]
    Size(String),

    #[error("adversary exhausted: {0}")]
    AdversaryExhausted(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
