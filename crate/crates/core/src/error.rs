use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("direction [{az_deg:.4}°; {el_deg:.4}°] outside az ∈ (-90°, 270°), el ∈ (-90°, 90°)")]
    InvalidDirection { az_deg: f64, el_deg: f64 },

    #[error("{what} must be a power of two, got {value}")]
    NotPowerOfTwo { what: &'static str, value: usize },

    #[error("invalid code parameters: {0}")]
    InvalidCode(String),

    #[error("direction lies in the {found} half-space, expected {expected}")]
    HalfSpaceMismatch {
        expected: crate::geometry::HalfSpace,
        found: crate::geometry::HalfSpace,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("doppler {doppler_hz} Hz outside the unambiguous interval (-{limit_hz}, {limit_hz}) Hz")]
    DopplerOutOfRange { doppler_hz: f64, limit_hz: f64 },

    #[error("noise covariance is not positive definite")]
    SingularCovariance,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("malformed {what}: {message}")]
    Parse { what: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
