//! Energy management system: a myopic dispatch LP whose storage cost is the
//! virtual parameter, with battery simulation, synthetic days, RL
//! environments, a safety-layer projection and the offline tuning baseline.

pub mod envs;
pub mod error;
pub mod instance;
pub mod io;
pub mod online;
pub mod safety;
pub mod tuning;

pub use envs::{
    decode_flows, default_scaler, make_env, virtual_cost_scale, EmsDay, EmsEnv, EmsState, EmsVariant, FlowLayer,
    SafetyLayer, ScheduleLayer, StageCostLayer, INFEASIBLE_COST,
};
pub use error::EmsError;
pub use instance::{
    generate_ems_instance, noise_std, price_at, sample_realization, EmsInstance, EmsRealization, DIESEL, GRID,
    NUM_FLOWS, RES, STORAGE,
};
pub use io::{
    instance_from_toml, instance_to_toml, load_instance, load_realization, load_schedule, realization_from_toml,
    realization_to_toml, save_instance, save_realization, save_schedule, schedule_from_text, schedule_to_text,
};
pub use online::{
    build_horizon_lp, build_online_lp, check_dispatch, clairvoyant_cost, delivered, simulate_day, simulate_day_with,
    solve_stage, solve_stage_lp, true_cost, DayOutcome, OnlineMode, StageDispatch, BALANCE_TOL,
};
pub use safety::{project_onto_balance, safety_layer_project, supply_bounds, PROJECTION_TOL};
pub use tuning::{
    average_cost, build_tuning_mip, schedule_point, tune_schedule, tuning_baseline, TuningOptions, TuningResult,
};

/// Reward divisor for learning on EMS costs.
pub const EMS_REWARD_SCALE: f64 = 1000.0;
