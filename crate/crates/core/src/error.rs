use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("data is not strictly convex: smallest Hessian eigenvalue {min_eigenvalue:e} at node {node}")]
    NonConvex { node: usize, min_eigenvalue: f64 },

    #[error("boundary projection failed at column {column}: |h| = {residual:e} after {iterations} iterations")]
    Projection { column: usize, residual: f64, iterations: usize },

    #[error("incompatible target domain: {0}")]
    Incompatible(String),

    #[error("run aborted at step {step}: {reason}")]
    Aborted { step: usize, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
