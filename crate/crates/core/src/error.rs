use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),
    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("marginal entry {index} is zero; smooth the marginals first")]
    ZeroMarginal { index: usize },
    #[error("non-finite objective value during line search at beta = {beta}")]
    NonFiniteLineSearch { beta: f64 },
    #[error("gradient vanished; the current point is stationary")]
    Stationary,
    #[error("Lipschitz backtracking exceeded {doublings} doublings")]
    BacktrackingExhausted { doublings: u32 },
    #[error("iteration limit {max_iters} reached (feasibility {feasibility:e}, gap {gap:e})")]
    IterationLimit {
        max_iters: usize,
        feasibility: f64,
        gap: f64,
    },
    #[error("problem too large for brute-force enumeration: N = {0} (max 5)")]
    TooLarge(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
