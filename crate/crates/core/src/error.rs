use thiserror::Error;

/// Errors raised across signal generation, detection and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("invalid sample grid: {0}")]
    Grid(String),

    #[error("invalid flip configuration: {0}")]
    FlipConfig(String),

    #[error("dimension mismatch: expected {expected} samples, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("degenerate likelihood: noise sigma must be strictly positive for the GLR objective")]
    DegenerateLikelihood,

    #[error("target P_D {target} not bracketed by power curve (achievable range [{min}, {max}])")]
    NotBracketed { target: f64, min: f64, max: f64 },

    #[error("invalid ROC curve: {0}")]
    Curve(String),

    #[error("trial {index} under {hypothesis}: {source}")]
    Trial {
        index: usize,
        hypothesis: crate::harness::Hypothesis,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}

/// Rejects NaN, infinities and values `<= 0`.
pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(param(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn ensure_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(param(name, format!("must be finite and >= 0, got {value}")))
    }
}
