use thiserror::Error;

/// Errors raised by the simulation engine, the estimators and the exact oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("site {site} out of range for a lattice of {len} sites")]
    SiteOutOfRange { site: i64, len: usize },

    #[error("could not sample an admissible configuration after {attempts} attempts")]
    SamplingFailure { attempts: u64 },

    #[error("event schedule exhausted at t = {after} (horizon {horizon})")]
    ScheduleExhausted { after: f64, horizon: f64 },

    #[error("walker came within {margin} sites of the lattice boundary at t = {time}")]
    BoundaryHit { time: f64, margin: usize },

    #[error("insufficient budget: {reason}")]
    InsufficientBudget { reason: String },

    #[error("model construction error: {0}")]
    ModelConstruction(String),

    #[error("integrand still {integrand:e} at horizon {horizon} (threshold {threshold:e})")]
    Horizon {
        horizon: f64,
        integrand: f64,
        threshold: f64,
    },

    #[error("right-hand side has mean {mean:e}, outside the mean-zero subspace")]
    Projection { mean: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
