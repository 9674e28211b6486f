use crate::lti::ValidationReport;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("degenerate polynomial")]
    DegeneratePolynomial,

    #[error("denominator constant term must be nonzero (non-causal system)")]
    NonCausalDenominator,

    #[error("numerator constant term must be zero (strictly proper)")]
    NotStrictlyProper,

    #[error("open-loop pole on unit circle at θ={theta}")]
    OpenLoopPoleOnCircle { theta: f64 },

    #[error("closed-loop pole on unit circle at θ={theta}")]
    ClosedLoopPoleOnCircle { theta: f64 },

    #[error("degenerate loop (G ≡ 1)")]
    DegenerateLoop,

    #[error("invalid loop: {0}")]
    InvalidLoop(ValidationReport),

    #[error("log-singularity at node θ={theta} (psd sample {value:e})")]
    LogSingularity { theta: f64, value: f64 },

    #[error("quadrature unreliable: pole magnitude {magnitude} within {margin} of unit circle")]
    QuadratureUnreliable { magnitude: f64, margin: f64 },

    #[error("marginal open-loop pole of magnitude {magnitude}")]
    MarginalOpenLoopPole { magnitude: f64 },

    #[error("quadrature spec invalid: {0}")]
    BadQuadratureSpec(&'static str),

    #[error("horizon too large for dense maps (n={n}, budget {budget} coefficients)")]
    HorizonTooLarge { n: usize, budget: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate covariance")]
    DegenerateCovariance,

    #[error("degenerate covariance (definition oracle)")]
    DegenerateCovarianceOracle,

    #[error("definition oracle horizon {n} exceeds limit {limit}")]
    OracleHorizon { n: usize, limit: usize },

    #[error("horizon must be >= 1")]
    EmptyHorizon,

    #[error("insufficient tail: lag window {window} needs more than {tail} stationary samples")]
    InsufficientTail { window: usize, tail: usize },

    #[error("insufficient trials: got {got}, need at least {need}")]
    InsufficientTrials { got: usize, need: usize },

    #[error("trajectory length {n} is not a power of two >= 256")]
    BadTrajectoryLength { n: usize },
}
