use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("angle {0} is outside the open interval (0, pi)")]
    InvalidAngle(f64),

    #[error("polynomial has a zero on the circle |z| = {radius} (min |p| = {min_modulus:e})")]
    BoundaryDegeneracy { radius: f64, min_modulus: f64 },

    #[error("root iteration did not converge after {iterations} iterations")]
    RootFailure {
        iterations: usize,
        best: Vec<Complex64>,
    },

    #[error("polynomial must have degree >= 1")]
    ConstantPolynomial,

    #[error("parameter out of range: {0}")]
    ParameterRange(String),

    #[error("degenerate normalization: weights sum to zero")]
    DegenerateNormalization,

    #[error("division by a vanishing leading coefficient a_1 = {0:e}")]
    DivisionDegeneracy(f64),

    #[error("cotangent singularity at node t = {0}")]
    CotangentSingularity(f64),

    #[error("auxiliary function has a pole in the closed unit disk")]
    InvalidPhi,

    #[error("boundary curve refinement budget exhausted")]
    ResolutionFailure,

    #[error("no real-axis crossing of the boundary curve found")]
    CrossingDetection,

    #[error("unknown map '{0}'")]
    UnknownMap(String),

    #[error("unknown parameter '{param}' for map '{map}'")]
    UnknownMapParam { map: String, param: String },

    #[error("trajectory escaped after {step} steps")]
    Divergence { step: usize },

    #[error("non-finite state after {step} steps")]
    NonFinite { step: usize },

    #[error("Jacobian undefined at nonsmooth point {0:?}")]
    NonsmoothPoint(Vec<f64>),

    #[error("dimension {0} not supported for multiplier computation")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cycle extraction rejected: residual {0:e} exceeds 1")]
    ExtractionRejected(f64),

    #[error("Newton refinement failed: {0}")]
    RefinementFailure(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
