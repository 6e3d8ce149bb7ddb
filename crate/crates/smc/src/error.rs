use thiserror::Error;
use unify_opt::LpError;

#[derive(Debug, Error)]
pub enum SmcError {
    #[error("cannot generate instance: {0}")]
    InfeasibleGeneration(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("solver: {0}")]
    Solver(#[from] LpError),
    #[error("solver reported {0}")]
    NotOptimal(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },
}

impl From<SmcError> for unify_core::CoreError {
    fn from(e: SmcError) -> Self {
        match e {
            SmcError::NotOptimal(m) => unify_core::CoreError::OptLayerInfeasible(m),
            other => unify_core::CoreError::OptLayer(other.to_string()),
        }
    }
}
