//! Set multi-cover with Poisson coverage requirements driven by an
//! observable: instance generation, deterministic and SAA models, recourse
//! evaluation, predict-then-optimize baselines and the single-step
//! environment whose virtual parameters are the predicted demands.

pub mod demand;
pub mod env;
pub mod error;
pub mod instance;
pub mod io;
pub mod models;
pub mod predict;

pub use demand::{generate_dataset, sample_demands, sample_observable, sample_poisson, Dataset};
pub use env::{action_scale, decode_demands, make_smc_env, observe, SmcDraw, SmcEnv, SmcLayer};
pub use error::SmcError;
pub use instance::{generate_instance, SmcInstance};
pub use models::{
    build_compact_saa_mip, build_deterministic_mip, build_saa_mip, covers_demand, posterior_optimal, recourse_cost,
    solve_deterministic, solve_saa, SaaForm,
};
pub use predict::{fit_rate_model, plain_saa, predict_then_optimize, rate_mape, round_half_up, PtoMode};

/// Desk-scale defaults: 20 elements, 100 sets, 8% density.
pub const DESK_ELEMENTS: usize = 20;
pub const DESK_SETS: usize = 100;
pub const DESK_DENSITY: f64 = 0.08;
