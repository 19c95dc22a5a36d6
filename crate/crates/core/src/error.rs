use thiserror::Error;

use crate::profile::{IterationTrace, Profile};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Iterate and trace handed back when a profile solve gives up.
#[derive(Debug, Clone)]
pub struct PartialSolve {
    pub profile: Profile,
    pub trace: IterationTrace,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("z = {z} is outside the transform domain [0, {limit}) at c = {c}")]
    DomainExceeded { z: f64, c: f64, limit: f64 },

    #[error("quadrature did not converge on [{a}, {b}]: error estimate {estimate:e} > {tolerance:e}")]
    QuadratureFailure {
        a: f64,
        b: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("speed bracket [{lo}, {hi}] does not separate root-free from rooted speeds")]
    BadBracket { lo: f64, hi: f64 },

    #[error("found {count} sign changes of the characteristic function at c = {c}; at most two are possible")]
    TooManyRoots { c: f64, count: usize },

    #[error("characteristic function has no positive root at c = {c}")]
    NoPositiveRoot { c: f64 },

    #[error("no m in ({lambda}, {upper}) with negative characteristic value at c = {c}")]
    NoAdmissibleM { c: f64, lambda: f64, upper: f64 },

    #[error("derivative of f appears unbounded near s = {s}")]
    UnboundedDerivative { s: f64 },

    #[error("iterate left the sub/super sandwich by {violation:e} at iteration {iteration}")]
    SandwichBroken { iteration: usize, violation: f64 },

    #[error("profile iteration did not converge after {} iterations", .0.trace.len())]
    NotConverged(Box<PartialSolve>),

    #[error("f(s) = g(s) has no positive solution in (0, {upper}]")]
    NoPositiveFixedPoint { upper: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
