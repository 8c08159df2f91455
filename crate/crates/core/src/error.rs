use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while building grids, evolving fields or
/// post-processing them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("domain error at (t = {t}, r = {r}): {message}")]
    Domain { t: f64, r: f64, message: String },

    #[error("orientation error: expected v <= u, got u = {u}, v = {v}")]
    Orientation { u: f64, v: f64 },

    #[error("coverage error: point (t = {t}, r = {r}) is not covered by the source field")]
    Coverage { t: f64, r: f64 },

    #[error("blow-up detected at (t = {t}, r = {r}), value {value}")]
    BlowUp { t: f64, r: f64, value: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("oscillating signal: {0}")]
    Oscillation(String),

    #[error("signal below noise floor: {0}")]
    NoiseFloor(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn domain(t: f64, r: f64, message: impl Into<String>) -> Self {
        Error::Domain {
            t,
            r,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the command-line tool: 1 for bad input,
    /// 2 for numerical failure, 3 for missing coverage.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Coverage { .. } => 3,
            Error::BlowUp { .. }
            | Error::Degenerate(_)
            | Error::Oscillation(_)
            | Error::NoiseFloor(_)
            | Error::Orientation { .. } => 2,
            Error::Config { .. }
            | Error::SupportViolation(_)
            | Error::Domain { .. }
            | Error::Io { .. }
            | Error::Format(_) => 1,
        }
    }

    /// Short machine-readable tag, used by the CLI diagnostics line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::SupportViolation(_) => "support",
            Error::Domain { .. } => "domain",
            Error::Orientation { .. } => "orientation",
            Error::Coverage { .. } => "coverage",
            Error::BlowUp { .. } => "blowup",
            Error::Degenerate(_) => "degenerate",
            Error::Oscillation(_) => "oscillation",
            Error::NoiseFloor(_) => "noise_floor",
            Error::Io { .. } => "io",
            Error::Format(_) => "format",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
