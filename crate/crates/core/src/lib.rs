//! Decomposed decision policies `π = g ∘ h`: a learned model `h` emits
//! virtual parameters that drive a constrained optimization layer `g`.

pub mod env;
pub mod error;
pub mod eval;
pub mod observation;
pub mod policy;
pub mod trajectory;

pub use env::{check_discount, Environment, Horizon, Transition};
pub use error::CoreError;
pub use eval::{evaluate_policy, EvalSummary};
pub use observation::{Observation, ObservationScaler};
pub use policy::{Decision, DecomposedPolicy, IdentityLayer, Model, OptLayer, VirtualParams};
pub use trajectory::{rollout, Step, Trajectory};
