//! Error type shared by all estimation and simulation routines.

/// Errors produced by the estimation pipeline.
#[derive(Debug, Clone, thiserror::Error)]
pub enum LrdError {
    /// Parameter vector violates the feasible set (d out of range, unstable AR).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Function evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent configuration (block sizes, window lengths, orders).
    #[error("configuration error: {0}")]
    Config(String),

    /// Non-finite value produced by a numerical routine.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Matrix solve rejected because the condition estimate is too large.
    #[error("ill-conditioned matrix: condition estimate {cond:.3e} exceeds {limit:.1e}")]
    IllConditioned { cond: f64, limit: f64 },

    /// Optimizer failed on a block; carries the block index when known.
    #[error("estimation failed{}: {msg}", .block.map(|j| format!(" on block {j}")).unwrap_or_default())]
    Estimation { block: Option<usize>, msg: String },

    /// Simulation model name not recognized.
    #[error("unknown model `{0}`")]
    UnknownModel(String),
}

pub type Result<T> = std::result::Result<T, LrdError>;
