use crate::env::{check_discount, Environment};
use crate::error::CoreError;
use crate::observation::Observation;
use crate::policy::{Decision, DecomposedPolicy, Model, OptLayer, VirtualParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: Observation,
    pub params: VirtualParams,
    pub decision: Decision,
    pub cost: f64,
}

/// Sequence of states, model outputs and decisions of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub discount: f64,
    /// Discounted cost `Σ γ^k f_k`, accumulated during the rollout.
    pub total: f64,
    /// Terminated early on a constraint violation.
    pub failed: bool,
    weight: f64,
}

impl Trajectory {
    pub fn new(discount: f64) -> Self {
        Trajectory {
            steps: Vec::new(),
            discount,
            total: 0.0,
            failed: false,
            weight: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: Step) {
        self.total += self.weight * step.cost;
        self.weight *= self.discount;
        self.steps.push(step);
    }

    pub fn recompute_total(&self) -> f64 {
        let mut weight = 1.0;
        let mut total = 0.0;
        for s in &self.steps {
            total += weight * s.cost;
            weight *= self.discount;
        }
        total
    }

    pub fn costs(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.cost)
    }
}

/// Runs one episode of `policy` in `env`, started from `instance` with `seed`.
///
/// A constraint violation reported by the environment ends the episode and
/// is recorded in [`Trajectory::failed`]; optimization-layer errors abort.
pub fn rollout<E, M, G>(
    policy: &mut DecomposedPolicy<M, G>,
    env: &mut E,
    instance: &E::Instance,
    seed: u64,
) -> Result<Trajectory, CoreError>
where
    E: Environment,
    M: Model,
    G: OptLayer<E::State>,
{
    check_discount(env.horizon(), env.discount())?;
    let mut obs = env.reset(instance, seed)?;
    let mut traj = Trajectory::new(env.discount());
    let limit = env.horizon().steps();
    loop {
        if let Some(n) = limit {
            if traj.len() >= n {
                return Err(CoreError::HorizonExceeded(n));
            }
        }
        let (params, decision) = policy.act(&obs, env.state())?;
        let tr = env.step(&decision)?;
        traj.push(Step {
            observation: obs,
            params,
            decision,
            cost: tr.cost,
        });
        if tr.failed {
            traj.failed = true;
        }
        if tr.done {
            return Ok(traj);
        }
        obs = tr.observation;
    }
}
