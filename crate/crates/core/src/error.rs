use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge after {panels} panels (partial value {partial:e}, error estimate {error_estimate:e})")]
    Quadrature {
        panels: usize,
        partial: f64,
        error_estimate: f64,
    },

    #[error("root not bracketed on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NotBracketed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("Riccati solution diverged at node {node} (tau = {tau:e}, |g| = {magnitude:e})")]
    Divergence {
        node: usize,
        tau: f64,
        magnitude: f64,
    },

    #[error("degenerate skew: denominator integral {0:e} vanishes (rho = 0?)")]
    DegenerateSkew(f64),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("maturity {tau} is not a node of the Riccati grid (step {step})")]
    GridMismatch { tau: f64, step: f64 },

    #[error("config error for key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
