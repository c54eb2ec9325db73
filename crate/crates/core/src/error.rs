use thiserror::Error;

/// Errors produced anywhere in the bounds pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unsupported quadrature order {order} (supported: 1..=30)")]
    UnsupportedOrder { order: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("linear solve did not reach tolerance: backward error {residual:e} after {iterations} iterations")]
    SolverFailure { residual: f64, iterations: usize },

    #[error("coupling weight xi = {xi} outside the admissible range (0, {xi_max})")]
    XiOutOfRange { xi: f64, xi_max: f64 },

    #[error("load or QoI region is not aligned with the mesh: {0}")]
    Misaligned(String),

    #[error("QoI target not found: {0}")]
    TargetNotFound(String),

    #[error("equilibrium check failed: relative defect {defect:e} exceeds {tolerance:e} ({context})")]
    EquilibriumViolation {
        defect: f64,
        tolerance: f64,
        context: String,
    },

    #[error("|lambda| = {value} >= 1 at element {element}; the inverse transform is singular")]
    SingularTransform { element: usize, value: f64 },

    #[error("estimator squared norm is negative ({value:e})")]
    NegativeEstimator { value: f64 },

    #[error("field pair role mismatch: expected {expected}, got {got}")]
    RoleMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("fields belong to different meshes or problems")]
    MeshMismatch,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
