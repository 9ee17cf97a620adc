use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A degree profile file failed validation or parsing.
    #[error("invalid degree profile: {0}")]
    Profile(String),
    /// A degree sequence violates a structural requirement.
    #[error("invalid degree sequence: {0}")]
    Sequence(String),
    /// A parameter is outside the domain of a closed-form expression.
    #[error("{0}")]
    Domain(String),
    /// Closed-form predictions exist only for stubbornness 2.
    #[error("theory available only for s=2 (got s={0})")]
    Stubbornness(u8),
    /// Fixed-point iteration ran out of its iteration budget.
    #[error("fixed-point iteration did not converge within {max_iter} iterations (last iterate {last})")]
    NoConvergence { max_iter: u32, last: f64 },
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: u32, n: usize },
    #[error("malformed event log: {0}")]
    EventLog(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
