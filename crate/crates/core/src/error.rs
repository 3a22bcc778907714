use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("g(s) < s on the whole scan range: no positive fixed point (is g'(0) > 1?)")]
    NoPositiveFixedPoint,
    #[error("g(s) - s changes sign {count} times on (0, {s_max}]: more than one positive fixed point")]
    MultipleFixedPoints { count: usize, s_max: f64 },
    #[error("n_samples = {0} is too small (need at least 16)")]
    InvalidSampleCount(usize),

    #[error("exponential term overflows at z = {z}")]
    Overflow { z: f64 },
    #[error("characteristic function has no positive real zero")]
    NoPositiveRoot,
    #[error("characteristic function has no negative real zero")]
    NoNegativeRoot,
    #[error("{what} did not converge; last iterate {last:?}")]
    ConvergenceFailure { what: &'static str, last: Vec<f64> },

    #[error("characteristic function is not hyperbolic for these parameters")]
    NotHyperbolic,
    #[error("quadrature tolerance exceeded: achieved {achieved:e}, requested {requested:e}")]
    QuadratureTolExceeded { achieved: f64, requested: f64 },
    #[error("requested horizon {requested} exceeds the certified stability horizon {horizon}")]
    HorizonExceeded { requested: f64, horizon: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("|g'(kappa)| = {g_prime_kappa_abs} is not below xi* = {xi_star}: point is outside D_kappa")]
    NotInDkappa { g_prime_kappa_abs: f64, xi_star: f64 },
    #[error("fundamental solution is not negative: max sample {max_value:e} at t = {at}")]
    NegativityViolated { max_value: f64, at: f64 },
    #[error("negative input s = {0}")]
    NegativeInput(f64),

    #[error("(h, c) = ({h}, {c}) is outside the closure of D_L: {reason}")]
    NotInDL { h: f64, c: f64, reason: String },
    #[error("iteration limit {max_iter} reached (last sup step {last_step:e})")]
    IterationLimitReached { max_iter: usize, last_step: f64 },
    #[error("iterate dropped below the lower barrier at t = {at} after {iteration} iterations")]
    CollapsedToZero { iteration: usize, at: f64 },
    #[error("iterate left [0, kappa]: value {value} at t = {at}")]
    RangeViolation { value: f64, at: f64 },
    #[error("monotone ordering violated at iteration {iteration}: increase {increase:e}")]
    OrderingViolated { iteration: usize, increase: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
