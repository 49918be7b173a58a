use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cost series has no terms")]
    EmptySeries,
    #[error("cost term {index} has negative coefficient {value}")]
    NegativeCoefficient { index: usize, value: f64 },
    #[error("cost term {index} has exponent {value} < 1")]
    ExponentBelowOne { index: usize, value: f64 },
    #[error("cost coefficients sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("invalid positions: {0}")]
    InvalidPositions(&'static str),
    #[error("invalid network: {0}")]
    InvalidNetwork(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("negative flow q[{from},{to}] = {amount}")]
    NegativeFlow { from: usize, to: usize, amount: f64 },
    #[error("coefficient of Q_{index} in q[{next},{index}] vanishes", next = index + 1)]
    DegenerateCoefficient { index: usize },
    #[error("singular system matrix (condition estimate {condition_estimate:e})")]
    SingularMatrix { condition_estimate: f64 },
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("simplex stalled after {iterations} iterations: {reason}")]
    NumericalStall {
        iterations: usize,
        reason: &'static str,
    },
    #[error("node energies differ by {spread}")]
    EqualEnergyViolation { spread: f64 },
    #[error("no node spends energy; lifetime is unbounded")]
    ZeroEnergyNoFlow,
}
