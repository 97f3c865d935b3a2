use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("mesh validation failed: {0}")]
    Validation(String),

    #[error("degenerate triangle {0} during assembly")]
    DegenerateTriangle(usize),

    #[error(
        "linear solver did not converge after {iterations} iterations \
         (relative residual {final_residual:.3e}, history {history:?})"
    )]
    SolverDivergence {
        iterations: usize,
        final_residual: f64,
        history: Vec<f64>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate Euler-Lagrange normalizer E = {0:.6e} (must be positive)")]
    DegenerateNormalizer(f64),

    #[error("all {0} seeds were rejected")]
    AllSeedsRejected(usize),

    #[error("bracket endpoints failed classification: {message}")]
    Bracket {
        message: String,
        low: Box<crate::threshold::AttainmentVerdict>,
        high: Box<crate::threshold::AttainmentVerdict>,
    },

    #[error("ODE step size underflow at r = {r:.6e}")]
    StepUnderflow { r: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
