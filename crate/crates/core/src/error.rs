use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: best estimate {best:.6e} with error {error:.3e} ({detail})")]
    QuadratureFailure {
        best: f64,
        error: f64,
        detail: String,
    },

    #[error("singularity: {0}")]
    Singularity(String),

    /// A stability or validity inequality of the model does not hold.
    #[error("validity violation: {0}")]
    Validity(String),

    #[error("integration unstable: {0}")]
    Unstable(String),

    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
