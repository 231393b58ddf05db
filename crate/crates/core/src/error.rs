use thiserror::Error;

/// Errors raised by mesh construction, assembly, solvers and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeecError {
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("boundary selector does not resolve to whole faces: {0}")]
    SelectorSplitsFace(String),
    #[error("point outside cell {cell}: barycentric coordinate {coord} < 0")]
    PointOutsideCell { cell: usize, coord: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular matrix: zero pivot at dof {dof}")]
    Singular { dof: usize },
    #[error("system with {n} unknowns exceeds direct solver cap {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("iteration limit {maxit} reached, relative residual {residual:e}")]
    MaxIterations { maxit: usize, residual: f64 },
    #[error("nontrivial harmonic forms for this configuration: {0}")]
    NontrivialHarmonics(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing manufactured solution")]
    MissingExactSolution,
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FeecError {
    fn from(e: std::io::Error) -> Self {
        FeecError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FeecError>;
