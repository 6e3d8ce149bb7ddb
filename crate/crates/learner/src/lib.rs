//! Neural policy machinery: a tanh MLP, a diagonal Gaussian policy, Adam,
//! and the advantage actor-critic update used to train the model `h`.
//!
//! Networks and the update are generic over [`Real`]; the [`Agent`] that
//! drives environments works in `f64`.

pub mod a2c;
pub mod adam;
pub mod error;
pub mod gaussian;
pub mod mlp;
pub mod real;
pub mod trainer;

pub use a2c::{a2c_update, policy_gradient, returns_to_go, A2cDiagnostics, A2cOptimizers, Episode, Sample};
pub use adam::{adam_step, Adam};
pub use error::LearnError;
pub use gaussian::GaussianPolicy;
pub use mlp::{Mlp, NamedTensor, Trace, HIDDEN};
pub use real::Real;
pub use trainer::{episode_from_trajectory, Agent, Checkpoint, EpochStats, Greedy, Sampler, TrainConfig};

pub type Mlp32 = Mlp<f32>;
pub type GaussianPolicy32 = GaussianPolicy<f32>;
