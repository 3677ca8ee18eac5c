use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e} exceeds {tolerance:.3e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("negative eigenvalue {value:.3e} below tolerance")]
    NegativeEigenvalue { value: f64 },

    #[error("trace {trace} is not admissible for a {kind}")]
    BadTrace { trace: f64, kind: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("support of ensemble member {member} escapes the barycenter support")]
    SupportEscape { member: usize },

    #[error("eigendecomposition failed to converge")]
    EigenFailure,

    #[error("{what} needs {required} but the cap is {cap}")]
    CapExceeded {
        what: &'static str,
        required: usize,
        cap: usize,
    },

    #[error("geometry rejected: {0}")]
    Geometry(String),

    #[error("string routing rejected: F_X and F_Z anticommute ({0})")]
    CrossingParity(String),

    #[error("state cannot be represented by a signed stabilizer mixture: {0}")]
    NotRepresentable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
