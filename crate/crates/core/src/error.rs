use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("optimization layer infeasible: {0}")]
    OptLayerInfeasible(String),
    #[error("optimization layer failed: {0}")]
    OptLayer(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("step called on a finished episode")]
    EpisodeFinished,
    #[error("discount {gamma} not allowed for this horizon")]
    InvalidDiscount { gamma: f64 },
    #[error("episode exceeded its horizon of {0} steps")]
    HorizonExceeded(usize),
    #[error("nothing to evaluate")]
    EmptyEvaluation,
    #[error("{0}")]
    Domain(String),
}
