use thiserror::Error;

use crate::rational::Q;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid rational literal {0:?}")]
    BadRational(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid breakpoints: {0}")]
    InvalidBreakpoints(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("value does not match the shape of the space at cell {0:?}")]
    ShapeMismatch(String),

    #[error("unknown cell {0:?}")]
    UnknownCell(String),

    #[error("branch index {index} out of range (correspondence has {count} branches)")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("invalid weight vector at cell {cell:?}: {reason}")]
    WeightInvalid { cell: String, reason: String },

    #[error("block {0:?} contains a saturated cell")]
    SaturatedBlock(String),

    #[error("function is not constant on g-block {0:?}")]
    NotGMeasurable(String),

    #[error("cell {cell:?} is a g-atom; no selection attains the requested conditional expectation")]
    AtomObstruction { cell: String, alpha: Option<Q> },

    #[error("cell {0:?} is not saturated")]
    NotSaturated(String),

    #[error("cell {0:?} has no inner coordinate")]
    NoInnerCoordinate(String),

    #[error("test function level {level} is not coarser than rademacher level {m}")]
    TestLevelTooFine { level: u32, m: u32 },

    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(Q),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("method {method} not applicable: {reason}")]
    MethodNotApplicable { method: String, reason: String },

    #[error("no convergence after {iterations} iterations (max gain {gain:e})")]
    NoConvergence { iterations: usize, gain: f64 },

    #[error("point {0} lies on the boundary of the type interval")]
    BoundaryPoint(Q),

    #[error("invalid interval partition: {0}")]
    InvalidPartition(String),

    #[error("search budget exceeded: {0}")]
    BudgetExceeded(String),
}
