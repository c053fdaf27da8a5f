use thiserror::Error;

use crate::credal::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state space: {0}")]
    StateSpace(String),

    #[error("model failed validation with {} violation(s):\n{}", .0.len(), format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("negative or NaN entry {value} at state `{label}`")]
    NegativeEntry { label: String, value: f64 },

    #[error("target set is empty")]
    EmptyTarget,

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("product space too large: {states} joint states exceeds the limit of {limit}")]
    ProductOverflow { states: u128, limit: usize },

    #[error("{solver} did not converge within {iterations} iterations (last change {change:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        change: f64,
    },

    /// A restricted linear system turned out singular. This means the
    /// reachability classification let an improper selection through.
    #[error("internal error: singular restricted system ({0})")]
    Singular(String),

    #[error("unknown solver `{0}`")]
    UnknownSolver(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}
