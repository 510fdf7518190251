use thiserror::Error;

/// Errors produced by design construction, evaluation and emulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("generator entry {value} is not coprime to {modulus}")]
    NotCoprime { value: u64, modulus: u64 },

    #[error("generator entry {0} duplicates another entry")]
    DuplicateEntry(u64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("projected design size {projected:.0} exceeds the cap of {cap} points")]
    SizeCap { projected: f64, cap: usize },

    #[error("correlation matrix is not positive definite after jitter {nugget:e} (condition estimate {condition:e})")]
    Factorization { nugget: f64, condition: f64 },

    #[error("missing output for design point with integer key {0:?}")]
    MissingOutput(Vec<u64>),

    #[error("estimation window holds only {0} points (need at least 3)")]
    DegenerateWindow(usize),

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Factorization { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
