use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("drive does not match level scheme: expected {expected}, got {got}")]
    SchemeMismatch { expected: String, got: String },

    #[error("unknown basis label `{0}`")]
    UnknownLabel(String),

    #[error("step size underflow at t = {t} us (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite value in state at t = {t} us")]
    NonFinite { t: f64 },

    #[error("trace drifted to {trace} at t = {t} us")]
    TraceDrift { t: f64, trace: f64 },

    #[error("phase undefined for `{label}`: amplitude {amplitude:e} at endpoint")]
    PhaseUndefined { label: String, amplitude: f64 },

    #[error("propagation failed for input |{input}>: {source}")]
    Input {
        input: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("unit error: {0}")]
    Unit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable category. Input failures report the
    /// category of the underlying error.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::SchemeMismatch { .. } => "scheme_mismatch",
            Error::UnknownLabel(_) => "unknown_label",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::NonFinite { .. } => "non_finite",
            Error::TraceDrift { .. } => "trace_drift",
            Error::PhaseUndefined { .. } => "phase_undefined",
            Error::Input { source, .. } => source.kind(),
            Error::Config { .. } => "config",
            Error::Unit(_) => "unit",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
