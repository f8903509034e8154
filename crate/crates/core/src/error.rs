use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("Kalman rank condition fails: rank {rank} < dimension {dim}")]
    NotControllable { rank: usize, dim: usize },

    #[error("invalid exponents: {0}")]
    InvalidExponents(String),

    #[error("exponent recursion degenerates at step {step}: denominator {denominator:e}")]
    DegenerateExponent { step: usize, denominator: f64 },

    #[error("invalid cutoff: {0}")]
    InvalidCutoff(String),

    #[error("incompatible cutoff supports: {0}")]
    IncompatibleSupports(String),

    #[error("symbol evaluated outside its domain: {0}")]
    DomainViolation(String),

    #[error("no admissible Gamma for {stage} below cap {cap:e}")]
    GammaExhausted { stage: String, cap: f64 },

    #[error("test function mass near the periodic seam is {tail:e}, limit {limit:e}")]
    TailViolation { tail: f64, limit: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("linear program failed: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotControllable { .. } => 3,
            Error::GammaExhausted { .. } => 4,
            Error::TailViolation { .. } => 5,
            Error::Config(_) | Error::Json(_) => 2,
            _ => 1,
        }
    }

    /// Short machine-readable class name for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidOperator(_) => "InvalidOperator",
            Error::NotControllable { .. } => "NotControllable",
            Error::InvalidExponents(_) => "InvalidExponents",
            Error::DegenerateExponent { .. } => "DegenerateExponent",
            Error::InvalidCutoff(_) => "InvalidCutoff",
            Error::IncompatibleSupports(_) => "IncompatibleSupports",
            Error::DomainViolation(_) => "DomainViolation",
            Error::GammaExhausted { .. } => "GammaExhausted",
            Error::TailViolation { .. } => "TailViolation",
            Error::Precondition(_) => "Precondition",
            Error::Config(_) => "ConfigError",
            Error::Solver(_) => "Solver",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
        }
    }
}
