//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("record slot structures do not match: {0}")]
    SlotMismatch(String),

    #[error("truncation tail {tail:.3e} exceeds tolerance {tol:.3e}; raise the Fock cutoff")]
    Truncation { tail: f64, tol: f64 },

    #[error("channel calibration required; run calibrate_channel on the honest channel first")]
    CalibrationMissing,

    #[error("insufficient calibration slots: got {got}, need at least {need}")]
    InsufficientSlots { got: usize, need: usize },

    #[error("state is not a bona fide Gaussian state: {0}")]
    InvalidState(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
