use std::io;

use thiserror::Error;

/// Errors produced by the metric core.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e}, tolerance {tolerance:e})")]
    NotPsd { min_eigenvalue: f64, tolerance: f64 },

    #[error("sample covariance is singular even after diagonal jitter")]
    SingularCovariance,

    #[error("invalid mixture displacement: lambda^2 = {lambda_sq} exceeds 2 sigma^2 = {limit}")]
    InvalidLambda { lambda_sq: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not an NPY file: {0}")]
    NotNpy(String),

    #[error("unsupported NPY version {major}.{minor}; only version 1.0 is accepted")]
    UnsupportedVersion { major: u8, minor: u8 },

    #[error("unsupported array layout: {0}")]
    UnsupportedLayout(String),

    #[error("unsupported dtype {0:?}; expected \"<f4\" or \"<f8\"")]
    UnsupportedDtype(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;
