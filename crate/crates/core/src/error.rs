//! Crate-wide error type.

use core::fmt;

/// Errors raised by model construction, solvers, and samplers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter or argument lies outside its mathematical domain.
    Domain(&'static str),
    /// A probability vector or kernel row does not sum to one.
    NotStochastic { sum: f64 },
    /// Transmit was requested from a blocked state.
    IllegalAction,
    /// An iterative solver exhausted its iteration cap.
    NoConvergence { iterations: u64, residual: f64 },
    /// The requested value is outside the range the model can attain.
    NoSolution(&'static str),
    /// The policy is all-transmit or all-halt, so no boundary slope exists.
    UndefinedSlope,
    /// An aggregate was requested over an empty collection.
    Empty(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::NotStochastic { sum } => {
                write!(f, "distribution does not sum to 1 (sum = {sum})")
            }
            Error::IllegalAction => write!(f, "transmit is not allowed from a blocked state"),
            Error::NoConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "no convergence after {iterations} iterations (residual = {residual:e})"
            ),
            Error::NoSolution(what) => write!(f, "no solution: {what}"),
            Error::UndefinedSlope => {
                write!(
                    f,
                    "threshold slope is undefined for an all-transmit or all-halt policy"
                )
            }
            Error::Empty(what) => write!(f, "empty input: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
