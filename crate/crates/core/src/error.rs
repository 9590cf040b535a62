use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {value} outside admissible range [{lo}, {hi}] of {what}")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("closest-point projection is singular at ({x}, {y})")]
    SingularProjection { x: f64, y: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("time step {dt:.3e} exceeds stability limit {limit:.3e}")]
    StepRejected { dt: f64, limit: f64 },

    #[error("phase field left [-1, 1]: max |phi| = {max_abs} at t = {t}")]
    MaxPrinciple { max_abs: f64, t: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("interface tube is not embedded in the domain: {0}")]
    NotEmbedded(String),

    #[error("time {t} outside the admissible window [0, {limit})")]
    WindowViolation { t: f64, limit: f64 },

    #[error("finite-difference stencil around ({x}, {y}) leaves the domain")]
    StencilOutOfDomain { x: f64, y: f64 },

    #[error("no interface contour to measure")]
    EmptyContour,

    #[error("rate fit needs at least 3 positive samples, got {0}")]
    InsufficientSamples(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
