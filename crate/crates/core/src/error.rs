use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid step outcome: {0}")]
    InvalidOutcome(String),

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("action dimension mismatch: expected {expected}, got {actual}")]
    ActionDimension { expected: usize, actual: usize },

    #[error("non-finite action component at index {0}")]
    NonFiniteAction(usize),

    #[error("snapshot does not belong to this simulator configuration")]
    ConfigMismatch,

    #[error("malformed snapshot: {0}")]
    MalformedSnapshot(String),

    #[error("simulator is terminal; reset or restore before stepping")]
    Terminal,

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("adaptation error: {0}")]
    Adaptation(String),

    #[error("epoch {epoch}: {source}")]
    Epoch {
        epoch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
