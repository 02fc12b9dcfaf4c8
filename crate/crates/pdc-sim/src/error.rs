//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid gain {0}: gain must be strictly positive")]
    InvalidGain(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid sampler configuration: {0}")]
    SamplerConfig(String),

    #[error("degenerate pulse batch: {0}")]
    DegenerateBatch(String),

    #[error("per-mode mean photon number {0:.3e} exceeds 2^31; use the continuous intensity sampler")]
    MeanOverflow(f64),

    #[error("grid under-resolves {scale}: {points:.1} points per 1/e width, need at least {required}")]
    Resolution {
        scale: String,
        points: f64,
        required: f64,
    },

    #[error("field aliasing at z = {z_cm} cm: fraction {fraction:.3e} of mode energy within 2 grid points of the boundary")]
    Aliasing { z_cm: f64, fraction: f64 },

    #[error("numerical computation failed: {0}")]
    Computation(String),

    #[error("calibration failed: relative residual {residual:.3} exceeds tolerance")]
    CalibrationFailed { residual: f64 },

    #[error("calibration could not reach the target: {0}")]
    CalibrationTarget(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for configuration/input problems,
    /// 3 for numerical or calibration failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } | Error::SamplerConfig(_) => 2,
            _ => 3,
        }
    }
}
