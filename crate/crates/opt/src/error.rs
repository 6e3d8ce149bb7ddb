use thiserror::Error;

use crate::lp::SolveResult;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum SolveError<T: Scalar = f64> {
    #[error("malformed model: {0}")]
    MalformedModel(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// Branch-and-bound ran out of nodes. Carries the best integral point
    /// found so far (if any) and a valid lower bound on the optimum.
    #[error("node limit exceeded after {nodes} nodes (bound {bound})")]
    NodeLimitExceeded {
        nodes: usize,
        incumbent: Option<Box<SolveResult<T>>>,
        bound: T,
    },
    #[error("duals are only available for LP optima")]
    DualsUnavailable,
}
