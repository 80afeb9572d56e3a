//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row} of the kernel sums to {sum:.17}, expected 1")]
    RowSum { row: usize, sum: f64 },

    #[error("kernel entry ({x},{y}) is negative: {value}")]
    NegativeEntry { x: usize, y: usize, value: f64 },

    #[error("support graph is disconnected: state {0} is unreachable from state 1")]
    Disconnected(usize),

    #[error("detailed balance fails at ({x},{y}): relative residual {residual:.3e}")]
    NotReversible { x: usize, y: usize, residual: f64 },

    #[error("negative rate at position {0}")]
    NegativeRate(usize),

    #[error("up({k}) + down({k}) = {sum} exceeds 1")]
    RowOverflow { k: usize, sum: f64 },

    #[error("{0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("transport problem infeasible: total masses differ by {0:.3e}")]
    Infeasible(f64),

    #[error("states {0} and {1} are not kernel neighbors")]
    NotNeighbors(usize, usize),

    #[error("state index out of range: {0}")]
    Index(String),

    #[error("curvature method needs a birth-death (tridiagonal) kernel")]
    MethodMismatch,

    #[error("vertex sets must be nonempty, disjoint, and inside 1..=m")]
    BadSets,

    #[error("optimizer failed to converge: {0}")]
    Convergence(String),

    #[error("input function is negative at position {0}")]
    NegativeInput(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
