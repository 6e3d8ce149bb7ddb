use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("oracle cost {0} is not positive")]
    ZeroOracle(f64),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown method {method:?} for {experiment}")]
    UnknownMethod { experiment: String, method: String },
    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Core(#[from] unify_core::CoreError),
    #[error(transparent)]
    Learn(#[from] unify_learner::LearnError),
    #[error(transparent)]
    Ems(#[from] unify_ems::EmsError),
    #[error(transparent)]
    Smc(#[from] unify_smc::SmcError),
}

pub(crate) fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}
