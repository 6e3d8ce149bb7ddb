use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unify_core::{rollout, DecomposedPolicy, Environment, Model, Observation, OptLayer, Trajectory, VirtualParams};

use crate::a2c::{a2c_update, A2cDiagnostics, A2cOptimizers, Episode, Sample};
use crate::adam::Adam;
use crate::error::LearnError;
use crate::gaussian::GaussianPolicy;
use crate::mlp::{Mlp, NamedTensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Episodes collected per update.
    pub batch_size: usize,
    pub epochs: usize,
    pub gamma: f64,
    pub seed: u64,
    /// Rewards are `−cost / reward_scale`.
    pub reward_scale: f64,
    /// Multiplier on the initial output layer of the mean network.
    pub init_output_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 100,
            epochs: 100,
            gamma: 1.0,
            seed: 0,
            reward_scale: 1.0,
            init_output_scale: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(LearnError::InvalidConfig(format!("learning rate {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(LearnError::InvalidConfig("batch size must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(LearnError::InvalidConfig(format!("discount {}", self.gamma)));
        }
        if !(self.reward_scale > 0.0) {
            return Err(LearnError::InvalidConfig(format!("reward scale {}", self.reward_scale)));
        }
        Ok(())
    }
}

/// Model `h` that samples from the Gaussian policy on the normalized observation.
pub struct Sampler<'a> {
    pub policy: &'a GaussianPolicy,
    pub rng: &'a mut ChaCha8Rng,
}

impl Model for Sampler<'_> {
    fn output(&mut self, x: &Observation) -> VirtualParams {
        let (a, _) = self
            .policy
            .sample_action(x.normalized().values(), self.rng)
            .expect("observation width matches the policy input");
        VirtualParams(a)
    }
}

/// Model `h` returning the mean action, used for evaluation.
#[derive(Clone, Copy)]
pub struct Greedy<'a>(pub &'a GaussianPolicy);

impl Model for Greedy<'_> {
    fn output(&mut self, x: &Observation) -> VirtualParams {
        VirtualParams(
            self.0
                .mean_action(x.normalized().values())
                .expect("observation width matches the policy input"),
        )
    }
}

pub fn episode_from_trajectory(traj: &Trajectory, reward_scale: f64) -> Episode {
    traj.steps
        .iter()
        .map(|s| Sample {
            obs: s.observation.normalized().values().to_vec(),
            action: s.params.0.clone(),
            reward: -s.cost / reward_scale,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_cost: f64,
    /// Total cost of each episode in the batch, in collection order.
    pub costs: Vec<f64>,
    /// Whether each episode ended in failure.
    pub failed: Vec<bool>,
    pub failures: usize,
    pub diagnostics: A2cDiagnostics,
}

/// Gaussian actor, critic, their optimizers and the sampling stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub config: TrainConfig,
    pub policy: GaussianPolicy,
    pub critic: Mlp,
    pub opt: A2cOptimizers,
    pub rng: ChaCha8Rng,
    pub epoch: usize,
}

impl Agent {
    pub fn new(obs_dim: usize, action_dim: usize, config: TrainConfig) -> Result<Self, LearnError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut mean = Mlp::standard(obs_dim, action_dim, &mut rng);
        mean.scale_output_layer(config.init_output_scale);
        let policy = GaussianPolicy::new(mean);
        let critic = Mlp::standard(obs_dim, 1, &mut rng);
        let opt = A2cOptimizers::new(&policy, &critic);
        Ok(Agent {
            config,
            policy,
            critic,
            opt,
            rng,
            epoch: 0,
        })
    }

    pub fn greedy(&self) -> Greedy<'_> {
        Greedy(&self.policy)
    }

    /// Collects `batch_size` episodes with instances drawn by `draw`, then
    /// applies one actor-critic update.
    pub fn train_epoch<E, G>(
        &mut self,
        env: &mut E,
        layer: &G,
        draw: &mut impl FnMut(&mut ChaCha8Rng) -> (E::Instance, u64),
    ) -> Result<EpochStats, LearnError>
    where
        E: Environment,
        G: OptLayer<E::State>,
    {
        let mut batch = Vec::with_capacity(self.config.batch_size);
        let mut costs = Vec::with_capacity(self.config.batch_size);
        let mut failed = Vec::with_capacity(self.config.batch_size);
        for _ in 0..self.config.batch_size {
            let (instance, seed) = draw(&mut self.rng);
            let sampler = Sampler {
                policy: &self.policy,
                rng: &mut self.rng,
            };
            let mut pi = DecomposedPolicy::new(sampler, layer);
            let traj = rollout(&mut pi, env, &instance, seed)?;
            costs.push(traj.total);
            failed.push(traj.failed);
            batch.push(episode_from_trajectory(&traj, self.config.reward_scale));
        }
        let diagnostics = a2c_update(
            &mut self.policy,
            &mut self.critic,
            &mut self.opt,
            &batch,
            self.config.gamma,
            self.config.learning_rate,
        )?;
        self.epoch += 1;
        Ok(EpochStats {
            epoch: self.epoch,
            mean_cost: costs.iter().sum::<f64>() / self.config.batch_size as f64,
            failures: failed.iter().filter(|&&f| f).count(),
            costs,
            failed,
            diagnostics,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut tensors = self.policy.mean.tensors("actor.mean");
        tensors.push(NamedTensor {
            name: "actor.log_std".into(),
            shape: vec![self.policy.log_std.len()],
            values: self.policy.log_std.clone(),
        });
        tensors.extend(self.critic.tensors("critic"));
        Checkpoint {
            config: self.config.clone(),
            epoch: self.epoch,
            tensors,
            actor_adam: self.opt.actor.clone(),
            critic_adam: self.opt.critic.clone(),
            rng: self.rng.clone(),
        }
    }

    pub fn from_checkpoint(c: Checkpoint) -> Result<Self, LearnError> {
        let mean = Mlp::from_tensors("actor.mean", &c.tensors)?;
        let log_std = c
            .tensors
            .iter()
            .find(|t| t.name == "actor.log_std")
            .ok_or_else(|| LearnError::Checkpoint("missing tensor actor.log_std".into()))?
            .values
            .clone();
        if log_std.len() != mean.output_dim() {
            return Err(LearnError::Checkpoint("log_std does not match the action width".into()));
        }
        let policy = GaussianPolicy { mean, log_std };
        let critic = Mlp::from_tensors("critic", &c.tensors)?;
        if c.actor_adam.m.len() != policy.num_params() || c.critic_adam.m.len() != critic.num_params() {
            return Err(LearnError::Checkpoint("optimizer state does not match parameters".into()));
        }
        Ok(Agent {
            config: c.config,
            policy,
            critic,
            opt: A2cOptimizers {
                actor: c.actor_adam,
                critic: c.critic_adam,
            },
            rng: c.rng,
            epoch: c.epoch,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), LearnError> {
        let text = serde_json::to_string(&self.checkpoint()).map_err(|e| LearnError::Checkpoint(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| LearnError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, LearnError> {
        let text = std::fs::read_to_string(path).map_err(|e| LearnError::Checkpoint(format!("{}: {e}", path.display())))?;
        let c: Checkpoint = serde_json::from_str(&text).map_err(|e| LearnError::Checkpoint(e.to_string()))?;
        Self::from_checkpoint(c)
    }
}

/// Everything needed to resume training bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub epoch: usize,
    pub tensors: Vec<NamedTensor>,
    pub actor_adam: Adam<f64>,
    pub critic_adam: Adam<f64>,
    pub rng: ChaCha8Rng,
}
