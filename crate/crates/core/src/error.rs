use thiserror::Error;

/// Failures reported by the geometry, meshing, assembly and solver stages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("boundary projection did not converge: {0}")]
    ProjectionNonConvergence(String),

    #[error("invalid mesh: {0}")]
    MeshInvalid(String),

    #[error("degenerate element {element}: {reason}")]
    DegenerateElement { element: usize, reason: String },

    #[error("degenerate boundary edge on element {element}, local edge {edge}")]
    DegenerateEdge { element: usize, edge: usize },

    #[error("singular metric tensor (det G = {0:e})")]
    SingularMetric(f64),

    #[error("unsupported quadrature degree {0} (supported: 0..=20)")]
    UnsupportedDegree(usize),

    #[error("penalty parameter must be positive, got {0}")]
    InvalidBeta(f64),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("iterative solver hit the iteration cap ({iterations}) at relative residual {residual:e}")]
    MaxIterationsExceeded { iterations: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
