use thiserror::Error;

use crate::petviashvili::ConvergenceTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("number of grid points must be even, got {0}")]
    NonEvenN(usize),

    #[error("number of grid points must be a power of two and at least 8, got {0}")]
    BadGridSize(usize),

    #[error("degenerate interval: a = {a} must be strictly less than b = {b}")]
    DegenerateInterval { a: f64, b: f64 },

    #[error("input field contains NaN or infinite values")]
    NonFiniteInput,

    #[error("step produced NaN or infinite values")]
    NonFiniteOutput,

    #[error("fields live on different grids")]
    MismatchedGrids,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("profile is identically zero")]
    ZeroProfile,

    #[error("sigma = {sigma} is outside the admissible range (sigma > {lower}) for beta = {beta}")]
    InvalidRegime { sigma: f64, beta: f64, lower: f64 },

    #[error("exponent q = {q} is outside the admissible range [{lower}, {upper}]")]
    InadmissibleExponent { q: f64, lower: f64, upper: f64 },

    #[error("stabilizing factor denominator vanished ({0:e})")]
    ZeroDenominator(f64),

    #[error("linear symbol omega + c k + lambda k^2 is not positive (min {min:e} at k = {k})")]
    IndefiniteSymbol { min: f64, k: f64 },

    #[error("no nontrivial standing wave in this regime: {0}")]
    NonexistenceRegime(String),

    #[error("iteration did not converge in {} iterations (last error {:e})", .0.iterations, .0.last_error())]
    NotConverged(Box<ConvergenceTrace>),

    #[error("iteration diverged at step {iteration} (error {error:e})")]
    Diverged { iteration: usize, error: f64 },

    #[error("speed too large: c^2 = {c2} must be below 4 lambda omega = {bound}")]
    SpeedTooLarge { c2: f64, bound: f64 },

    #[error("series too short: need at least {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("initial amplitude has not decayed at the domain boundary (max {0:e})")]
    BoundaryNotDecayed(f64),

    #[error("bad magic bytes in profile file")]
    BadMagic,

    #[error("unsupported profile format version {0}")]
    UnsupportedVersion(u32),

    #[error("profile file is truncated")]
    TruncatedFile,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
