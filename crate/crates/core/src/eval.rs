use crate::env::Environment;
use crate::error::CoreError;
use crate::policy::{DecomposedPolicy, Model, OptLayer};
use crate::trajectory::rollout;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub mean: f64,
    pub per_instance: Vec<f64>,
    pub failures: usize,
}

impl EvalSummary {
    pub fn std(&self) -> f64 {
        let n = self.per_instance.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let var = self.per_instance.iter().map(|c| (c - self.mean).powi(2)).sum::<f64>() / (n - 1.0);
        var.sqrt()
    }
}

/// Empirical estimate of the expected episode cost over `instances`, the
/// i-th instance being run with `seeds[i]`.
pub fn evaluate_policy<E, M, G>(
    policy: &mut DecomposedPolicy<M, G>,
    env: &mut E,
    instances: &[E::Instance],
    seeds: &[u64],
) -> Result<EvalSummary, CoreError>
where
    E: Environment,
    M: Model,
    G: OptLayer<E::State>,
{
    if instances.is_empty() {
        return Err(CoreError::EmptyEvaluation);
    }
    if seeds.len() != instances.len() {
        return Err(CoreError::DimensionMismatch {
            expected: instances.len(),
            got: seeds.len(),
        });
    }
    let mut per_instance = Vec::with_capacity(instances.len());
    let mut failures = 0;
    for (inst, &seed) in instances.iter().zip(seeds) {
        let traj = rollout(policy, env, inst, seed)?;
        failures += usize::from(traj.failed);
        per_instance.push(traj.total);
    }
    let mean = per_instance.iter().sum::<f64>() / per_instance.len() as f64;
    Ok(EvalSummary {
        mean,
        per_instance,
        failures,
    })
}
