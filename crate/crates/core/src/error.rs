use thiserror::Error;

/// Errors raised by the library.
///
/// The variants follow the failure classes of the solver pipeline: bad input,
/// bad geometry, a violated mesh-size condition, and numerical breakdown.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlbError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("degenerate or invalid geometry: {0}")]
    Geometry(String),
    #[error("point {point:?} lies outside the simplex")]
    Domain { point: Vec<f64> },
    #[error("mesh file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mesh-size condition violated: {0}")]
    Condition(String),
    #[error("no convergence after {iterations} iterations: {msg}")]
    Iteration { iterations: usize, msg: String },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GlbError {
    fn from(e: std::io::Error) -> Self {
        GlbError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GlbError>;
