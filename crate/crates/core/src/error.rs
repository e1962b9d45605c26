use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("moment generating function diverges at lambda = {lambda}")]
    MgfDivergent { lambda: f64 },
    #[error("minimizer search did not converge: {0}")]
    SearchFailed(String),
    #[error("tilting undefined: lambda0 = {lambda0} is at an endpoint of [0, 1]")]
    EndpointTilt { lambda0: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("depth {requested} exceeds tree depth {max}")]
    DepthExceeded { requested: usize, max: usize },
    #[error("level {level} has {size} vertices, over the budget of {budget}")]
    Budget { level: usize, size: u128, budget: u64 },
    #[error("count overflow at level {0}")]
    CountOverflow(usize),
    #[error("invalid vertex: {0}")]
    InvalidVertex(String),
    #[error("invalid gauge: {0}")]
    InvalidGauge(String),
    #[error("invalid tube: {0}")]
    InvalidTube(String),
    #[error("state explosion: {states} lattice states exceed the limit of {limit}")]
    StateExplosion { states: usize, limit: usize },
    #[error("splitting population went extinct at stage {stage} (checkpoint k = {checkpoint})")]
    Extinction { stage: usize, checkpoint: usize },
    #[error("survivor population {size} exceeds the cap of {cap} at level {level}")]
    PopulationOverflow { level: usize, size: usize, cap: usize },
    #[error("estimate unavailable: {0}")]
    Estimate(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Whether the error stems from a size budget rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::Budget { .. }
                | Error::CountOverflow(_)
                | Error::StateExplosion { .. }
                | Error::PopulationOverflow { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
