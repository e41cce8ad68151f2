use thiserror::Error;

use crate::iteration::IterationTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("exponent {0} must lie in (1, inf)")]
    BadExponent(f64),

    #[error("every sample is zero")]
    AllZero,

    #[error("grid would exceed the node limit ({requested} > {limit})")]
    ResourceLimit { requested: usize, limit: usize },

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("domain error evaluating weight at x = {x}: {message}")]
    Domain { x: f64, message: String },

    #[error("weight `{name}` is not positive on the interval (value {value} at x = {x})")]
    NotPositive { name: String, x: f64, value: f64 },

    #[error("functions live on different grids")]
    GridMismatch,

    #[error("anchor {0} lies outside the interval")]
    AnchorOffGrid(f64),

    #[error("T f vanished identically; the grid or weights are corrupt")]
    ZeroImage,

    #[error("iteration did not converge after {} steps", .0.iterations)]
    NotConverged(Box<IterationTrace>),

    #[error("wanted {wanted} interior zeros, got {achieved}")]
    NodalCountMissed { wanted: usize, achieved: usize },

    #[error("no start produced a triple with {0} interior zeros")]
    Empty(usize),

    #[error("block {0} carries zero mass")]
    DegenerateBlock(usize),

    #[error("need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("no sign change of the shooting defect inside [{lo}, {hi}]")]
    BracketFailed { lo: f64, hi: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),
}
