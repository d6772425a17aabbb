use alloc::string::String;

/// Errors raised by the numerical routines. Verdicts such as "not hyperbolic"
/// or "indeterminate" are data and never show up here.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("convexity violated: smallest eigenvalue of L_vv is {min_eigenvalue:e}")]
    ConvexityViolation { min_eigenvalue: f64 },
    #[error("Legendre inversion failed after {iterations} iterations (residual {residual:e})")]
    TransformFailure { iterations: usize, residual: f64 },
    #[error("not convex: H_pp eigenvalue {min_eigenvalue:e} at grid point {index}")]
    NotConvex { min_eigenvalue: f64, index: usize },
    #[error("integration escaped at t = {last_time} ({reason})")]
    Escape { last_time: f64, reason: &'static str },
    #[error("orbit does not close: gap {gap:e}")]
    NotPeriodic { gap: f64 },
    #[error("comparison function has a pole at t = {t}")]
    Pole { t: f64 },
    #[error("solution interval of length {length} is too short (need > 2)")]
    InsufficientWindow { length: f64 },
    #[error("conjugate point at t = {time} inside the requested window")]
    DisconjugacyViolation { time: f64 },
    #[error("base frame is singular at t = {t}")]
    ReconstructionDomain { t: f64 },
    #[error("frame is vertical on a whole subinterval near t = {t}")]
    DegenerateFrame { t: f64 },
    #[error("flow direction projects to zero at sample {sample}")]
    SingularProjection { sample: usize },
    #[error("graph transform does not contract (factor {factor})")]
    NoContraction { factor: f64 },
    #[error("exponential fit failed: data grows at rate {growth_rate}")]
    FitFailure { growth_rate: f64 },
    #[error("field spans do not overlap")]
    DisjointSpans,
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: &str) -> Self {
        Error::InvalidArgument(String::from(msg))
    }
}
