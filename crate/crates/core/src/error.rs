use std::path::PathBuf;

use thiserror::Error;

use crate::fitting::{ExpPairParams, FitReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{quantity} = {value} is outside [{min}, {max}]")]
    Domain {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("need at least {required} samples, got {got}")]
    InsufficientData { required: usize, got: usize },

    #[error("fit did not converge from any start (best residual norm {:.3e})", best.residual_norm)]
    FitFailure { best: Box<FitReport<ExpPairParams>> },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("R² undefined: observations have zero variance")]
    UndefinedRSquared,

    #[error("no qualifying {0} transition found")]
    TransitionNotFound(&'static str),

    #[error("{axis} torque {desired_nm:.4} N-m exceeds capability {achievable_nm:.4} N-m at this pose")]
    CapabilityExceeded {
        axis: &'static str,
        desired_nm: f64,
        achievable_nm: f64,
    },

    #[error("support fraction undefined: gravity torque is zero at this pose")]
    UndefinedFraction,

    #[error("relative reduction undefined: unpowered baseline is {0}")]
    UndefinedReduction(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error("missing channel `{0}`")]
    MissingChannel(String),

    #[error("sample rate mismatch: expected {expected_hz} Hz, found {found_hz:.3} Hz")]
    RateMismatch { expected_hz: f64, found_hz: f64 },

    #[error("segmentation failed: {0}")]
    Segmentation(String),

    #[error("incomplete data: {0}")]
    IncompleteData(String),

    #[error("filter design: {0}")]
    FilterDesign(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(quantity: &'static str, value: f64, min: f64, max: f64) -> Self {
        Error::Domain {
            quantity,
            value,
            min,
            max,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for input problems, 2 for model or computation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::FitFailure { .. }
            | Error::DegenerateDesign(_)
            | Error::UndefinedRSquared
            | Error::CapabilityExceeded { .. }
            | Error::UndefinedFraction
            | Error::UndefinedReduction(_)
            | Error::FilterDesign(_)
            | Error::Segmentation(_) => 2,
            _ => 1,
        }
    }
}

/// Checks `value` lies in the closed range and is finite.
pub(crate) fn check_range(quantity: &'static str, value: f64, min: f64, max: f64) -> Result<f64> {
    if value.is_finite() && value >= min && value <= max {
        Ok(value)
    } else {
        Err(Error::domain(quantity, value, min, max))
    }
}
