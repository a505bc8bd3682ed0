use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least {min}, got {got}")]
    DimensionTooSmall { min: usize, got: usize },

    #[error("density is singular at the endpoint t = {t} for d = {d}")]
    SingularEndpoint { d: usize, t: f64 },

    #[error("degree {degree} exceeds the basis maximum {lmax}")]
    DegreeOutOfRange { degree: usize, lmax: usize },

    #[error("recurrence coefficient at degree {degree} lost positivity ({value}); lmax too large for working precision")]
    RecurrenceBreakdown { degree: usize, value: f64 },

    #[error("quadrature with {nodes} nodes cannot resolve integrands of degree {required}")]
    QuadratureTooSmall { nodes: usize, required: usize },

    #[error("invalid activation: {0}")]
    InvalidActivation(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("polynomial is not homogeneous")]
    NotHomogeneous,

    #[error("index {index} out of range for {d} variables")]
    IndexOutOfRange { index: usize, d: usize },

    #[error("rotation generator needs distinct indices, got ({0}, {0})")]
    DegenerateGenerator(usize),

    #[error("explicit harmonic bases are limited to d <= {max_d}, l <= {max_l}; requested d = {d}, l = {l}")]
    ExplicitRegimeExceeded {
        d: usize,
        l: usize,
        max_d: usize,
        max_l: usize,
    },

    #[error("harmonic basis for d = {d}, l = {l} is rank deficient: found {found} of {expected}")]
    RankDeficient {
        d: usize,
        l: usize,
        found: usize,
        expected: usize,
    },

    #[error("point is off the sphere: |x|^2 = {norm2}, expected {d}")]
    OffSphere { norm2: f64, d: usize },

    #[error("the Stein kernel construction covers degrees l >= 1 only")]
    ZeroDegreeMode,

    #[error("expansion is not centered (constant mode {0}); center the activation first")]
    NotCentered(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0})")]
    NotPositiveSemidefinite(f64),

    #[error("Cholesky factorization failed after jitter {0}")]
    CholeskyFailed(f64),

    #[error("outer-weight law {0} cannot be sampled")]
    UnsupportedSampling(String),

    #[error("invalid moments: {0}")]
    InvalidMoments(String),

    #[error("assignment size {size} exceeds the limit {limit}")]
    AssignmentTooLarge { size: usize, limit: usize },

    #[error("Sinkhorn did not reach marginal tolerance {tol} in {iterations} iterations (violation {violation})")]
    SinkhornNotConverged {
        iterations: usize,
        tol: f64,
        violation: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
