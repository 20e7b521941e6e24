use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("densities live on different grids")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bisection bracket [{lo}, {hi}] does not contain a sign change")]
    Bracket { lo: f64, hi: f64 },
    #[error("no non-trivial fixed point at parameter {0}")]
    NoBadFixedPoint(f64),
    #[error("profile does not cross level {0}")]
    NoCrossing(f64),
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("velocity denominator vanishes")]
    VanishingDenominator,
    #[error("need at least 2 trajectory samples, got {0}")]
    TooFewSamples(usize),
    #[error("memory budget exceeded: {0}")]
    Budget(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::VanishingDenominator)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
