use crate::error::CoreError;
use crate::observation::Observation;
use crate::policy::Decision;

/// End of horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl Horizon {
    pub fn steps(self) -> Option<usize> {
        match self {
            Horizon::Finite(n) => Some(n),
            Horizon::Infinite => None,
        }
    }
}

/// γ must lie in (0, 1], and may equal 1 only on a finite horizon.
pub fn check_discount(horizon: Horizon, gamma: f64) -> Result<(), CoreError> {
    let ok = gamma > 0.0 && gamma <= 1.0 && (gamma < 1.0 || matches!(horizon, Horizon::Finite(_)));
    if ok {
        Ok(())
    } else {
        Err(CoreError::InvalidDiscount { gamma })
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Observation,
    /// Stage cost `f` of the decision just applied.
    pub cost: f64,
    pub done: bool,
    /// The episode was terminated because the decision violated a hard
    /// constraint.
    pub failed: bool,
}

/// Sequential decision process `⟨X, Z, p₊, f, p₁, γ⟩`.
pub trait Environment {
    /// Data an episode is started from (a forecast day, an observed demand
    /// context, ...).
    type Instance;
    /// Full state available to the optimization layer at decision time.
    type State;

    fn reset(&mut self, instance: &Self::Instance, seed: u64) -> Result<Observation, CoreError>;
    fn state(&self) -> &Self::State;
    fn step(&mut self, decision: &Decision) -> Result<Transition, CoreError>;
    fn horizon(&self) -> Horizon;
    fn discount(&self) -> f64;
}
