//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid of {requested} points exceeds the budget of {budget} points")]
    MemoryBudget { requested: usize, budget: usize },

    #[error("source slice at node {node} is not Hermitian (asymmetry {asymmetry:.3e})")]
    NonHermitianSource { node: usize, asymmetry: f64 },

    #[error("iterate table is missing order {0}")]
    MissingOrder(usize),

    #[error("divergent norm: {0}")]
    DivergentNorm(String),

    #[error("quadrature failed to converge on [{a}, {b}]: error estimate {err:.3e} after {panels} panels")]
    QuadratureNonConvergence { a: f64, b: f64, err: f64, panels: usize },

    #[error("instability detected at step {step}: {component} norm grew {before:.3e} -> {after:.3e}")]
    Instability { step: usize, component: String, before: f64, after: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed spectrum file: {0}")]
    MalformedDump(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
