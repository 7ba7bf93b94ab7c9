use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter gate violated: {0}")]
    ParameterGate(String),

    #[error("knot mismatch: {0}")]
    KnotMismatch(String),

    #[error("fixed-point iteration is not contracting (fitted increment ratio {ratio:.4}) after {iterations} iterations")]
    NonContraction { ratio: f64, iterations: usize },

    #[error("fixed-point iteration exhausted {iterations} iterations (last increment {increment:.3e})")]
    MaxIterations { iterations: usize, increment: f64 },

    #[error("no λ ≤ {lambda} damps the auxiliary solution: sup|∇ξ| = {sup_grad:.4} > 1/2")]
    LambdaSearch { lambda: f64, sup_grad: f64 },

    #[error("inversion of y ↦ y + ξ(s, y) failed to converge at v = {point:?} (residual {residual:.3e})")]
    Inversion { point: Vec<f64>, residual: f64 },

    #[error("path {path}: {source}")]
    Path {
        path: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{fraction:.4}% of paths left the trusted interior band; domain too small")]
    DomainTooSmall { fraction: f64 },

    #[error("deterministic estimator: zero standard error with nonzero gap {gap:.3e}")]
    DegenerateEstimator { gap: f64 },

    #[error("ladder level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("scenario parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("scenario validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
