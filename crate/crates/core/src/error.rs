use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("frequency {frequency} Hz is at or above the Nyquist limit of {nyquist} Hz")]
    Aliasing { frequency: f64, nyquist: f64 },

    #[error("multi-tone has no components")]
    EmptyTone,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("closed-form g(t) requires zero-phase components, found phase {0}")]
    NonZeroPhase(f64),

    #[error("reference signal has zero norm")]
    ZeroReference,

    #[error("kernel of length {kernel} is longer than signal of length {signal}")]
    KernelTooLong { kernel: usize, signal: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("cache was produced by a different parameter version")]
    StaleCache,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable identifier printed by the CLI on runtime failure.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Aliasing { .. } => "AliasingError",
            Error::EmptyTone => "EmptyToneError",
            Error::LengthMismatch { .. } => "LengthMismatchError",
            Error::DegenerateInput(_) => "DegenerateInputError",
            Error::NonZeroPhase(_) => "NonZeroPhaseError",
            Error::ZeroReference => "ZeroReferenceError",
            Error::KernelTooLong { .. } => "KernelTooLongError",
            Error::ShapeMismatch(_) => "ShapeMismatchError",
            Error::LabelOutOfRange { .. } => "LabelOutOfRangeError",
            Error::StaleCache => "StaleCacheError",
            Error::InvalidArgument(_) => "InvalidArgumentError",
            Error::Parse(_) => "ParseError",
            Error::Io(_) => "IoError",
            Error::Csv(_) => "CsvError",
            Error::Json(_) => "JsonError",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
