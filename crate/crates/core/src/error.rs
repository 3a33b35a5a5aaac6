use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unknown {what} `{name}` (known: {known})")]
    UnknownName {
        what: &'static str,
        name: String,
        known: String,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("time {t} outside the valid range [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    #[error("modulus argument s = {s} outside (0, {s_max}]")]
    ModulusDomain { s: f64, s_max: f64 },

    #[error("empty sample set for radius {0}")]
    EmptySample(f64),

    #[error("estimator needs at least {needed} radii, got {got}")]
    TooFewRadii { needed: usize, got: usize },

    #[error("coincident pair at index {0}")]
    CoincidentPair(usize),

    #[error("CFL violation: dt * max|u| / h = {cfl:.4} exceeds {limit}")]
    Cfl { cfl: f64, limit: f64 },

    #[error("vorticity mean {0:e} is not zero")]
    NonZeroMean(f64),

    #[error("operation requires odd-odd symmetry")]
    MissingSymmetry,

    #[error("radius {radius} below the resolution limit {limit}")]
    BelowResolution { radius: f64, limit: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source} (already written: {written:?})")]
    Io {
        path: PathBuf,
        written: Vec<PathBuf>,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            written: Vec::new(),
            source,
        }
    }
}

/// Returns `value` if finite, otherwise a [`Error::NonFinite`] tagged with `context`.
pub(crate) fn finite(value: f64, context: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(context.to_string()))
    }
}
