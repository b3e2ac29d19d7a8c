use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular Bohr frequency {frequency} (resonant degenerate configuration)")]
    SingularFrequency { frequency: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("map is not completely positive: Choi eigenvalue {eigenvalue:e} below -{tolerance:e}")]
    NotCompletelyPositive { eigenvalue: f64, tolerance: f64 },

    #[error("Kraus set violates completeness: residual {residual:e} exceeds {tolerance:e}")]
    ChannelInvalid { residual: f64, tolerance: f64 },

    #[error("closed-form Kraus expression left its domain: {0}")]
    FormulaDomain(String),

    #[error("single-qubit reduction invalid: b-matrix eigenvalue {eigenvalue:e}")]
    ReductionInvalid { eigenvalue: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("concurrence precondition failed: {0}")]
    NotEntangled(String),
}

pub type Result<T> = std::result::Result<T, Error>;
