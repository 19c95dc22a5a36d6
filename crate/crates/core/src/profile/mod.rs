//! Wave profiles as fixed points of `φ = k₁ * (k₂ * g(φ) + f_β(φ))`.

mod conv;
mod grid;
mod nonlinearity;
mod problem;
mod solve;

pub use conv::{exp_filter_left, exp_filter_right, k1_convolve, K2Convolution};
pub use grid::Grid;
pub use nonlinearity::{
    Birth, Constants, FixedPoint, FixedPointReport, HypothesisCheck, HypothesisReport, Nonlinearity, Regularized,
    Removal,
};
pub use problem::{ProblemOptions, WaveProblem};
pub use solve::{
    critical_speed_profile, max_derivative, CriticalLevel, CriticalReport, IterationTrace, Phase, Profile,
    SolveOptions, TraceEntry,
};
