//! Bi-level proximal gradient optimization.
//!
//! Solves problems where the inner objective `phi = f + g` (smooth `f`, proximable
//! `g`) has many minimizers and we want the one preferred by an outer objective
//! `omega = sigma + psi`. Instead of solving a sequence of regularized problems,
//! the solver runs accelerated proximal gradient steps on the moving objective
//! `phi + alpha_k * omega` with `alpha_k = (k + a)^(-gamma)`, which converges to
//! an inner minimizer that is also outer-optimal.
//!
//! Crate layout:
//! - [`functions`]: smooth and proximable building blocks,
//! - [`problem`]: problem assembly, lifting, and the combined prox table,
//! - [`solver`]: the dynamic-schedule solver, a fixed-regularization FISTA
//!   baseline, iterate traces, and inequality audits,
//! - [`rates`]: the scalar sequences (`alpha_k`, `t_k`, ...) and the certified
//!   convergence-rate bounds,
//! - [`harness`]: instance generators, reference oracles, and experiment runs.

// Validation guards are written `!(x > 0.0)` on purpose: the negation also
// rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod functions;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod problem;
pub mod rates;
pub mod rng;
pub mod solver;
#[cfg(test)]
pub(crate) mod test_oracles;

pub use linalg::{DenseMatrix, Vector};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A problem description field is missing, malformed, or inconsistent.
    #[error("problem spec field `{field}`: {message}")]
    Spec { field: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested closed form does not exist for this pairing; the caller
    /// should lift the problem instead.
    #[error("no combined prox closed form for this (g, psi) pairing; lift the problem")]
    ProxUnavailable,

    #[error("configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {path}: {message}")]
    Json { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn spec(field: &str, message: impl Into<String>) -> Self {
        Error::Spec {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
