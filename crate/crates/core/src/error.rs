use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which side of a distribution pair carries zero mass on an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    P,
    Q,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::P => f.write_str("p"),
            Side::Q => f.write_str("q"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The two distributions do not share a support, so the divergence is undefined.
    #[error("support mismatch: outcome {outcome:?} has zero mass under {zero_side}")]
    SupportMismatch { outcome: String, zero_side: Side },

    /// Mass of `p` outside the support of `q` exceeds the allowed slack.
    #[error("mass {mass} outside the support of q exceeds delta = {delta}")]
    DeltaMassExceeded { mass: f64, delta: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Some `lambda * loss` product escapes the range of `f64::exp`.
    #[error("exponent overflow: lambda * loss = {0} is outside the representable range")]
    ExponentOverflow(f64),

    #[error("convolution would produce {0} atoms, above the limit of {1}")]
    TooManyAtoms(usize, usize),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Rejects NaN/inf and values below `min`.
pub(crate) fn check_at_least(name: &str, value: f64, min: f64) -> Result<()> {
    if !value.is_finite() || value < min {
        return Err(domain(format!(
            "{name} must be finite and >= {min}, got {value}"
        )));
    }
    Ok(())
}

pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(domain(format!(
            "{name} must be finite and > 0, got {value}"
        )));
    }
    Ok(())
}
