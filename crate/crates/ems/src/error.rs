use thiserror::Error;
use unify_opt::LpError;

#[derive(Debug, Error)]
pub enum EmsError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("stage {stage}: {source}")]
    Solver { stage: usize, source: LpError },
    #[error("stage {stage}: online LP reported {status}")]
    NotOptimal { stage: usize, status: String },
    #[error("empty feasible set: {0}")]
    EmptyFeasible(String),
    #[error("schedule has {got} entries, expected {expected}")]
    ScheduleLength { expected: usize, got: usize },
    #[error("tuning model: {0}")]
    Tuning(String),
    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },
}

impl From<EmsError> for unify_core::CoreError {
    fn from(e: EmsError) -> Self {
        match e {
            EmsError::NotOptimal { .. } | EmsError::EmptyFeasible(_) => unify_core::CoreError::OptLayerInfeasible(e.to_string()),
            other => unify_core::CoreError::OptLayer(other.to_string()),
        }
    }
}
