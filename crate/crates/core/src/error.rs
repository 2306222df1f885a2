//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures surfaced by evaluators and samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar argument is outside the documented domain (negative time, NaN, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A model or run configuration is malformed.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Numerical integration did not reach the requested tolerance.
    #[error("quadrature did not converge: achieved relative error {achieved:.3e}, requested {requested:.1e}")]
    Quadrature { achieved: f64, requested: f64 },
    /// A root finder could not bracket or converge.
    #[error("root finding failed: {0}")]
    RootFinding(String),
    /// A sampler would exceed its memory or work budget.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// The question cannot be decided from the available information.
    #[error("indeterminate: {0}")]
    Indeterminate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects non-finite or out-of-range scalars with a uniform message.
pub(crate) fn check(name: &str, value: f64, ok: bool) -> Result<f64> {
    if value.is_nan() || !ok {
        Err(Error::InvalidInput(format!("{name} = {value} is out of range")))
    } else {
        Ok(value)
    }
}

pub(crate) fn nonneg(name: &str, value: f64) -> Result<f64> {
    check(name, value, value.is_finite() && value >= 0.0)
}

pub(crate) fn positive(name: &str, value: f64) -> Result<f64> {
    check(name, value, value.is_finite() && value > 0.0)
}
