use thiserror::Error;

/// Errors produced by the library.
///
/// `Domain` marks numerically invalid inputs (non-positive scales, thresholds
/// out of range). `Argument` marks structurally invalid requests (missing or
/// inconsistent options). `Regime` marks parameter combinations outside the
/// validity region of an asymptotic bound; the message names the violated
/// inequality.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("regime error: {0}")]
    Regime(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

pub(crate) fn require_nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be nonnegative and finite, got {v}"
        )))
    }
}

pub(crate) fn require_open_unit(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must lie strictly inside (0, 1), got {v}"
        )))
    }
}
