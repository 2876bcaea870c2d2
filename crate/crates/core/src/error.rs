use thiserror::Error;

/// Errors raised by mesh construction, assembly, preconditioner composition
/// and the spectral estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("logarithmic kernel scale {scale} must exceed the domain diameter {diameter}")]
    CoercivityRisk { scale: f64, diameter: f64 },

    #[error("the Green's function kernel is only defined on (0,1); rescale the mesh")]
    RescaleRequired,

    #[error("Lanczos breakdown: {0}")]
    Breakdown(String),

    #[error("operator pair is not positive definite (Ritz value {0:e})")]
    Indefinite(f64),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape(context: &'static str, expected: usize, got: usize) -> Error {
    Error::Shape {
        context,
        expected,
        got,
    }
}
