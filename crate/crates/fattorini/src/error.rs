use thiserror::Error;

/// Errors produced by the model builders, spectral analysis, rank tests,
/// synthesis and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("separation failure: {0}")]
    SeparationFailure(String),

    #[error("contour hits spectrum: {0}")]
    ContourHitsSpectrum(String),

    #[error("not stabilizable: {0}")]
    NotStabilizable(String),

    #[error("no admissible family exists: {0}")]
    NoAdmissibleFamily(String),

    #[error("perturbation search exhausted after {tries} tries (last margin {margin:.3e})")]
    GiveUp { tries: usize, margin: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular step: {0}")]
    SingularStep(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI summary files.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid-dimension",
            Error::InvalidSupport(_) => "invalid-support",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::SeparationFailure(_) => "separation-failure",
            Error::ContourHitsSpectrum(_) => "contour-hits-spectrum",
            Error::NotStabilizable(_) => "not-stabilizable",
            Error::NoAdmissibleFamily(_) => "no-admissible-family",
            Error::GiveUp { .. } => "give-up",
            Error::InsufficientData(_) => "insufficient-data",
            Error::SingularStep(_) => "singular-step",
            Error::ResourceLimit(_) => "resource-limit",
            Error::UnsupportedInput(_) => "unsupported-input",
            Error::Internal(_) => "internal-consistency",
            Error::Numerical(_) => "numerical-failure",
            Error::Parse { .. } => "parse-error",
            Error::Io(_) => "io-error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
