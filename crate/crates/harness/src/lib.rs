//! Experiment harness: configuration, seeding, metrics, the four pipelines
//! (EMS tuning, EMS constraints, SMC decision-focused learning, SMC scenario
//! sweep) and their CSV reports.

pub mod config;
pub mod ems;
pub mod error;
pub mod metrics;
pub mod report;
pub mod seeds;
pub mod smc;

use std::time::Instant;

pub use config::{EmsSettings, Experiment, ExperimentConfig, SmcSettings};
pub use ems::{run_ems_constraints, run_ems_tuning, EmsData};
pub use error::HarnessError;
pub use metrics::{
    gaps, mean_std, optimality_gap, trailing_mean, ExperimentOutput, MetricsRecord, RecordKind, SMOOTHING_WINDOW,
};
pub use report::{emit_report, load_manifest, load_records, write_series, Manifest};
pub use seeds::derive_seed;
pub use smc::{run_smc_dfl, run_smc_stochastic, SmcData};

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    match config.experiment {
        Experiment::EmsTuning => run_ems_tuning(config),
        Experiment::EmsConstraints => run_ems_constraints(config),
        Experiment::SmcDfl => run_smc_dfl(config),
        Experiment::SmcStochastic => run_smc_stochastic(config),
    }
}

/// Runs the pipeline and writes its report into the configured directory.
pub fn run_and_report(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    let start = Instant::now();
    let out = run_experiment(config)?;
    emit_report(&out, config, &config.out_dir, start.elapsed().as_secs_f64())?;
    Ok(out)
}
