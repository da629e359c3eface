use thiserror::Error;

/// Errors raised across the model hierarchy.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two or more roots of the drift cubic coincide within tolerance, so the
    /// parameters sit on the boundary between the monostable and bistable regimes.
    #[error("degenerate regime: repeated root of the drift cubic near {roots:?}")]
    DegenerateRegime { roots: Vec<f64> },

    #[error("stuck state: every reaction propensity is zero")]
    StuckState,

    #[error("reducible chain: {rate} rate vanishes at state {state}")]
    ReducibleChain { rate: &'static str, state: usize },

    #[error("singular linear system (zero pivot at row {row})")]
    SingularSystem { row: usize },

    #[error("time step {dt} is not below the stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("invalid node pair ({i}, {j}) for a graph on {n} nodes")]
    InvalidPair { i: usize, j: usize, n: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
