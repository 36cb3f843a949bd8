use alloc::string::String;

/// Errors produced by the reconstruction library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid optical configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("tensor shape mismatch: expected {expected:?}, found {found:?}")]
    TensorShape {
        expected: [usize; 4],
        found: [usize; 4],
    },
    #[error("object distance {object} m differs from requested synthesis distance {requested} m")]
    DistanceMismatch { object: f64, requested: f64 },
    #[error("{0} contains non-finite values")]
    NonFinite(&'static str),
    #[error("{0} contains negative values")]
    Negative(&'static str),
    #[error("mean intensity must be positive, found {0}")]
    NonPositiveIntensity(f64),
    #[error("support mask excludes every pixel")]
    EmptySupport,
    #[error("objective diverged at iteration {iteration}: {value} exceeds 10x the initial {initial}")]
    Diverged {
        iteration: usize,
        value: f64,
        initial: f64,
    },
    #[error("objective increased at iteration {iteration}: {previous} -> {value}")]
    NotMonotone {
        iteration: usize,
        previous: f64,
        value: f64,
    },
    #[error("non-finite loss {loss} at epoch {epoch} (previous loss {previous})\n{dump}")]
    NonFiniteLoss {
        epoch: usize,
        loss: f64,
        previous: f64,
        dump: String,
    },
}

impl Error {
    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Diverged { .. } | Error::NotMonotone { .. } | Error::NonFiniteLoss { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
