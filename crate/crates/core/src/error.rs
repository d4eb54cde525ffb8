use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by field construction, transforms, the measurement simulator and persistence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid extent {extent} is too small for waist {waist}: need at least {required}")]
    ExtentTooSmall { extent: f64, waist: f64, required: f64 },

    #[error("{what} is not resolved: spacing {spacing} exceeds {max_spacing}; use at least {required_points} points")]
    Unresolved {
        what: &'static str,
        spacing: f64,
        max_spacing: f64,
        required_points: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("expected a {expected} grid, got {found}")]
    KindMismatch { expected: &'static str, found: String },

    #[error("{what}: imaginary residual {residual:e} exceeds {threshold:e} (relative to peak); check the sign and conjugation conventions of the input")]
    ImaginaryResidual {
        what: &'static str,
        residual: f64,
        threshold: f64,
    },

    #[error("Q distribution has negative value {min:e} below -{threshold:e} of peak; the input is not a physical KR grid")]
    NegativeQ { min: f64, threshold: f64 },

    #[error("P kernel overflows inside the regularization mask at characteristic-plane radius {radius}")]
    KernelOverflow { radius: f64 },

    #[error("fit did not converge after {iterations} iterations (best residual {best_residual:e})")]
    FitNotConverged { iterations: usize, best_residual: f64 },

    #[error("DSP configuration: {0}")]
    DspConfig(String),

    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("unsupported format version {found} in {path} (this build reads version {expected})")]
    VersionMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("truncated payload in {path}: expected {expected} bytes, found {actual}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("config line {line}: `{key}` {reason}")]
    OutOfRange {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("config line {line}: cannot parse `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("config: missing required key `{key}` (required by line {line})")]
    MissingKey { line: usize, key: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
