//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("payoffs must satisfy T > R > P > S, got T={t}, R={r}, P={p}, S={s}")]
    PayoffOrdering { t: f64, r: f64, p: f64, s: f64 },

    #[error("probability out of [0, 1] at index {index}: {value}")]
    ProbabilityRange { index: usize, value: f64 },

    #[error("invalid information-class code {code:?}: {reason}")]
    ClassCode { code: String, reason: String },

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("class {code} has {expected} blocks, got {got} probabilities")]
    BlockCount {
        code: String,
        expected: usize,
        got: usize,
    },

    #[error("strategy component index {0} out of range (expected 0..4)")]
    ComponentIndex(usize),

    #[error(
        "stationary distribution is degenerate (normalization {k:.3e}); \
         the outcome chain may be reducible or periodic"
    )]
    DegenerateStationary { k: f64 },

    #[error("power iteration did not converge in {max_iter} iterations (residual {residual:.3e})")]
    PowerIterationDiverged { max_iter: u64, residual: f64 },

    #[error("finite-difference step {step} leaves [0, 1] at component {component} (value {value})")]
    StepOutOfRange {
        component: usize,
        value: f64,
        step: f64,
    },

    #[error("linear system for the stationary gradient is singular")]
    SingularSystem,

    #[error("integration produced a non-finite state at t = {time}")]
    NonFiniteState { time: f64 },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("fixed point is not interior: x3* = {x3}, y4* = {y4}")]
    BoundaryFixedPoint { x3: f64, y4: f64 },

    #[error("invariant undefined: {0}")]
    InvariantDomain(String),

    #[error("not enough qualifying samples: needed {needed}, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
