use crate::adam::Adam;
use crate::error::LearnError;
use crate::gaussian::GaussianPolicy;
use crate::mlp::Mlp;
use crate::real::Real;

/// One transition as seen by the learner: normalized observation, the
/// sampled action (virtual parameters) and the scaled reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T = f64> {
    pub obs: Vec<T>,
    pub action: Vec<T>,
    pub reward: T,
}

pub type Episode<T = f64> = Vec<Sample<T>>;

#[derive(Debug, Clone, PartialEq)]
pub struct A2cDiagnostics<T = f64> {
    /// Un-normalized advantages `G_k − V(x_k)`, in batch order.
    pub advantages: Vec<T>,
    pub returns: Vec<T>,
    pub critic_loss: T,
    pub policy_grad_norm: T,
}

/// Actor and critic optimizer states.
#[derive(Debug, Clone, PartialEq)]
pub struct A2cOptimizers<T = f64> {
    pub actor: Adam<T>,
    pub critic: Adam<T>,
}

impl<T: Real> A2cOptimizers<T> {
    pub fn new(policy: &GaussianPolicy<T>, critic: &Mlp<T>) -> Self {
        A2cOptimizers {
            actor: Adam::new(policy.num_params()),
            critic: Adam::new(critic.num_params()),
        }
    }
}

/// Discounted reward-to-go of each step.
pub fn returns_to_go<T: Real>(rewards: &[T], gamma: T) -> Vec<T> {
    let mut out = vec![T::zero(); rewards.len()];
    let mut acc = T::zero();
    for k in (0..rewards.len()).rev() {
        acc = rewards[k] + gamma * acc;
        out[k] = acc;
    }
    out
}

/// `mean_k ∇θ log π(a_k | x_k) · A_k`, the ascent direction on expected reward.
pub fn policy_gradient<T: Real>(policy: &GaussianPolicy<T>, samples: &[(&[T], &[T], T)]) -> Result<Vec<T>, LearnError> {
    let mut grad = vec![T::zero(); policy.num_params()];
    if samples.is_empty() {
        return Ok(grad);
    }
    for (x, a, adv) in samples {
        policy.accumulate_log_prob_grad(x, a, *adv, &mut grad)?;
    }
    let n = T::lit(samples.len() as f64);
    for g in &mut grad {
        *g = *g / n;
    }
    Ok(grad)
}

fn check_finite<T: Real>(v: &[T], what: &str, episodes: usize) -> Result<(), LearnError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(LearnError::NonFiniteGradient {
            episodes,
            detail: format!("{what} entry {i}"),
        }),
        None => Ok(()),
    }
}

/// One advantage actor-critic update on a batch of episodes.
///
/// Advantages are normalized to zero mean and unit variance when the batch
/// holds at least two steps. The critic regresses on the reward-to-go by
/// mean squared error. Actor and critic each take a single Adam step.
pub fn a2c_update<T: Real>(
    policy: &mut GaussianPolicy<T>,
    critic: &mut Mlp<T>,
    opt: &mut A2cOptimizers<T>,
    batch: &[Episode<T>],
    gamma: T,
    lr: T,
) -> Result<A2cDiagnostics<T>, LearnError> {
    let steps: usize = batch.iter().map(Vec::len).sum();
    if steps == 0 {
        return Err(LearnError::EmptyBatch);
    }
    let n = T::lit(steps as f64);
    let mut returns = Vec::with_capacity(steps);
    let mut advantages = Vec::with_capacity(steps);
    let mut critic_grad = vec![T::zero(); critic.num_params()];
    let mut critic_loss = T::zero();
    for ep in batch {
        let rewards: Vec<T> = ep.iter().map(|s| s.reward).collect();
        for (s, g) in ep.iter().zip(returns_to_go(&rewards, gamma)) {
            let trace = critic.forward_trace(&s.obs)?;
            let v = trace.output()[0];
            let err = v - g;
            critic_loss = critic_loss + err * err / n;
            critic.backward(&trace, &[(err + err) / n], &mut critic_grad);
            returns.push(g);
            advantages.push(g - v);
        }
    }

    let weights = if steps >= 2 {
        let mean = advantages.iter().copied().sum::<T>() / n;
        let var = advantages.iter().map(|&a| (a - mean) * (a - mean)).sum::<T>() / n;
        let sd = var.sqrt() + T::lit(1e-8);
        advantages.iter().map(|&a| (a - mean) / sd).collect()
    } else {
        advantages.clone()
    };

    let mut samples = Vec::with_capacity(steps);
    for (s, &w) in batch.iter().flatten().zip(&weights) {
        samples.push((s.obs.as_slice(), s.action.as_slice(), w));
    }
    let pg = policy_gradient(policy, &samples)?;
    check_finite(&pg, "policy gradient", batch.len())?;
    check_finite(&critic_grad, "critic gradient", batch.len())?;

    let policy_grad_norm = pg.iter().map(|g| *g * *g).sum::<T>().sqrt();
    let ascent: Vec<T> = pg.iter().map(|g| -*g).collect();
    let mut p = policy.params();
    opt.actor.step(&mut p, &ascent, lr)?;
    policy.set_params(&p)?;
    opt.critic.step(critic.params_mut(), &critic_grad, lr)?;

    Ok(A2cDiagnostics {
        advantages,
        returns,
        critic_loss,
        policy_grad_norm,
    })
}
