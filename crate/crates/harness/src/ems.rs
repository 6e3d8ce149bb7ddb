//! The two EMS pipelines: virtual-cost tuning against the KKT baseline, and
//! constraint handling against end-to-end RL and the safety layer.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use unify_core::{evaluate_policy, CoreError, Decision, DecomposedPolicy, OptLayer, VirtualParams};
use unify_ems::{
    clairvoyant_cost, generate_ems_instance, make_env, sample_realization, simulate_day, tune_schedule,
    virtual_cost_scale, EmsDay, EmsInstance, EmsRealization, EmsState, EmsVariant, FlowLayer, SafetyLayer,
    ScheduleLayer, StageCostLayer, TuningOptions,
};
use unify_learner::Agent;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::HarnessError;
use crate::metrics::{ExperimentOutput, MetricsRecord, RecordKind};
use crate::seeds::stream;

/// Training pairs with their clairvoyant costs, and the held-out test days.
#[derive(Debug, Clone)]
pub struct EmsData {
    pub train: Vec<EmsDay>,
    pub train_oracle: Vec<f64>,
    pub test: Vec<EmsDay>,
    pub test_oracle: Vec<f64>,
}

/// Days with a positive clairvoyant cost; the rare others are redrawn.
fn draw_days(rng: &mut ChaCha8Rng, count: usize, n: usize) -> Result<(Vec<EmsDay>, Vec<f64>), HarnessError> {
    let mut days = Vec::with_capacity(count);
    let mut oracle = Vec::with_capacity(count);
    while days.len() < count {
        let instance = generate_ems_instance(rng, n);
        let realization = sample_realization(&instance, rng);
        let c = clairvoyant_cost(&instance, &realization)?;
        if c > 0.0 {
            days.push(EmsDay { instance, realization });
            oracle.push(c);
        }
    }
    Ok((days, oracle))
}

pub fn ems_data(config: &ExperimentConfig) -> Result<EmsData, HarnessError> {
    let n = config.ems.stages;
    let (train, train_oracle) = draw_days(&mut stream(config.data_seed("train"), "days"), config.ems.train_pairs, n)?;
    let (test, test_oracle) = draw_days(&mut stream(config.data_seed("test"), "days"), config.eval_instances, n)?;
    Ok(EmsData {
        train,
        train_oracle,
        test,
        test_oracle,
    })
}

/// The optimization layer each EMS method puts after its model.
#[derive(Debug, Clone, Copy)]
pub enum EmsLayer {
    Schedule(ScheduleLayer),
    Stage(StageCostLayer),
    Flow(FlowLayer),
    Safety(SafetyLayer),
}

impl OptLayer<EmsState> for EmsLayer {
    fn solve(&self, state: &EmsState, y: &VirtualParams) -> Result<Decision, CoreError> {
        match self {
            EmsLayer::Schedule(g) => g.solve(state, y),
            EmsLayer::Stage(g) => g.solve(state, y),
            EmsLayer::Flow(g) => g.solve(state, y),
            EmsLayer::Safety(g) => g.solve(state, y),
        }
    }
}

/// Environment variant and layer of a learned EMS method.
pub fn ems_method(method: &str, instance: &EmsInstance) -> Option<(EmsVariant, EmsLayer)> {
    let scale = virtual_cost_scale(instance);
    Some(match method {
        "unify-single-step" => (EmsVariant::SingleStep, EmsLayer::Schedule(ScheduleLayer::new(scale))),
        "unify-sequential" => (EmsVariant::Sequential, EmsLayer::Stage(StageCostLayer { scale })),
        "rl" => (EmsVariant::EndToEnd, EmsLayer::Flow(FlowLayer)),
        "safety-layer" => (EmsVariant::Safety, EmsLayer::Safety(SafetyLayer)),
        _ => return None,
    })
}

fn learned(method: &str, data: &EmsData, experiment: Experiment) -> Result<(EmsVariant, EmsLayer), HarnessError> {
    ems_method(method, &data.train[0].instance).ok_or_else(|| HarnessError::UnknownMethod {
        experiment: experiment.to_string(),
        method: method.into(),
    })
}

/// Greedy test-set evaluation of a trained agent.
pub fn evaluate_ems_agent(
    method: &str,
    kind: RecordKind,
    agent: &Agent,
    data: &EmsData,
    experiment: Experiment,
) -> Result<MetricsRecord, HarnessError> {
    let (variant, layer) = learned(method, data, experiment)?;
    let n = data.test[0].instance.n();
    let mut env = make_env(variant, n, data.test[0].instance.capacity);
    let mut policy = DecomposedPolicy::new(agent.greedy(), layer);
    let seeds = vec![0; data.test.len()];
    let s = evaluate_policy(&mut policy, &mut env, &data.test, &seeds)?;
    Ok(MetricsRecord::from_costs(method, kind, &s.per_instance, &data.test_oracle)?.with_failures(s.failures))
}

/// How long a method may train.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Epochs(usize),
    /// Wall-clock seconds, with an epoch cap.
    Seconds(f64, usize),
}

/// Trains one learned method on episodes drawn uniformly from the training
/// pairs. Returns the agent with one record per epoch plus the untrained and
/// trained test evaluations.
pub fn train_ems_method(
    config: &ExperimentConfig,
    data: &EmsData,
    method: &str,
    budget: Budget,
) -> Result<(Agent, Vec<MetricsRecord>), HarnessError> {
    let (variant, layer) = learned(method, data, config.experiment)?;
    let n = config.ems.stages;
    let mut env = make_env(variant, n, data.train[0].instance.capacity);
    let mut agent = Agent::new(variant.obs_dim(n), variant.action_dim(n), config.train_config(method))?;
    let mut records = vec![evaluate_ems_agent(method, RecordKind::Untrained, &agent, data, config.experiment)?];
    let start = Instant::now();
    let mut last_epoch = 0.0;
    loop {
        let elapsed = start.elapsed().as_secs_f64();
        let go = match budget {
            Budget::Epochs(e) => agent.epoch < e,
            Budget::Seconds(s, cap) => agent.epoch < cap && elapsed + last_epoch <= s,
        };
        if !go {
            break;
        }
        let mut drawn = Vec::with_capacity(config.train.batch_size);
        let mut draw = |rng: &mut ChaCha8Rng| {
            let i = rng.random_range(0..data.train.len());
            drawn.push(i);
            (data.train[i].clone(), 0)
        };
        let t0 = Instant::now();
        let stats = agent.train_epoch(&mut env, &layer, &mut draw)?;
        last_epoch = t0.elapsed().as_secs_f64();
        let oracle: Vec<f64> = drawn.iter().map(|&i| data.train_oracle[i]).collect();
        records.push(
            MetricsRecord::from_costs(method, RecordKind::Epoch, &stats.costs, &oracle)?
                .with_epoch(stats.epoch)
                .with_failures(stats.failures)
                .with_seconds(start.elapsed().as_secs_f64()),
        );
    }
    let train_seconds = start.elapsed().as_secs_f64();
    records.push(evaluate_ems_agent(method, RecordKind::Trained, &agent, data, config.experiment)?.with_seconds(train_seconds));
    Ok((agent, records))
}

/// Instance whose prices and battery are shared by all days and whose
/// forecasts are the per-stage maxima, so that its sale cap covers every
/// scenario.
pub fn tuning_template(days: &[EmsDay]) -> EmsInstance {
    let mut t = days[0].instance.clone();
    for d in &days[1..] {
        for (a, b) in t.res_forecast.iter_mut().zip(&d.instance.res_forecast) {
            *a = a.max(*b);
        }
        for (a, b) in t.load_forecast.iter_mut().zip(&d.instance.load_forecast) {
            *a = a.max(*b);
        }
    }
    t
}

/// One virtual-cost schedule for all days, tuned on the realizations of the
/// first training pairs. Returns the schedule and the solve time.
pub fn run_tuning(config: &ExperimentConfig, data: &EmsData) -> Result<(Vec<f64>, f64), HarnessError> {
    let k = config.ems.tuning_scenarios.min(data.train.len());
    let template = tuning_template(&data.train[..k]);
    let scenarios: Vec<EmsRealization> = data.train[..k].iter().map(|d| d.realization.clone()).collect();
    let opts = TuningOptions {
        node_limit: config.ems.tuning_node_limit,
        ..TuningOptions::default()
    };
    let start = Instant::now();
    let result = tune_schedule(&template, &scenarios, &opts)?;
    Ok((result.schedule, start.elapsed().as_secs_f64()))
}

/// Test-set record of a fixed virtual-cost schedule.
pub fn evaluate_schedule(method: &str, schedule: &[f64], data: &EmsData) -> Result<MetricsRecord, HarnessError> {
    let costs = data
        .test
        .iter()
        .map(|d| simulate_day(&d.instance, &d.realization, schedule).map(|o| o.cost))
        .collect::<Result<Vec<f64>, _>>()?;
    MetricsRecord::from_costs(method, RecordKind::Baseline, &costs, &data.test_oracle)
}

fn oracle_record(data: &EmsData) -> Result<MetricsRecord, HarnessError> {
    MetricsRecord::from_costs("clairvoyant", RecordKind::Oracle, &data.test_oracle, &data.test_oracle)
}

/// Non-learned methods of the tuning experiment. Returns their records and
/// the TUNING solve time when it ran.
pub fn ems_baselines(config: &ExperimentConfig, data: &EmsData) -> Result<(Vec<MetricsRecord>, Option<f64>), HarnessError> {
    let mut records = vec![oracle_record(data)?];
    let mut tuning_seconds = None;
    if config.has("tuning") {
        let (schedule, secs) = run_tuning(config, data)?;
        records.push(evaluate_schedule("tuning", &schedule, data)?.with_seconds(secs));
        tuning_seconds = Some(secs);
    }
    if config.has("myopic") {
        records.push(evaluate_schedule("myopic", &vec![0.0; config.ems.stages], data)?);
    }
    Ok((records, tuning_seconds))
}

/// TUNING fixes the wall-clock budget; the UNIFY variants then train under
/// it. In deterministic mode they run the configured epochs instead.
pub fn run_ems_tuning(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    config.validate()?;
    let data = ems_data(config)?;
    let (mut records, tuning_seconds) = ems_baselines(config, &data)?;
    let budget_seconds = config.budget_seconds.or(tuning_seconds);
    let budget = match budget_seconds {
        Some(s) if !config.deterministic => Budget::Seconds(s, usize::MAX),
        _ => Budget::Epochs(config.epochs),
    };
    for method in ["unify-single-step", "unify-sequential"] {
        if config.has(method) {
            records.extend(train_ems_method(config, &data, method, budget)?.1);
        }
    }
    Ok(ExperimentOutput {
        experiment: config.experiment,
        records,
        budget_seconds,
    })
}

/// End-to-end RL, the safety layer and UNIFY-sequential for the configured
/// epochs, logging failed episodes per epoch.
pub fn run_ems_constraints(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    config.validate()?;
    let data = ems_data(config)?;
    let mut records = vec![oracle_record(&data)?];
    let budget = match config.budget_seconds {
        Some(s) if !config.deterministic => Budget::Seconds(s, config.epochs),
        _ => Budget::Epochs(config.epochs),
    };
    for method in Experiment::EmsConstraints.methods() {
        if config.has(method) {
            records.extend(train_ems_method(config, &data, method, budget)?.1);
        }
    }
    Ok(ExperimentOutput {
        experiment: config.experiment,
        records,
        budget_seconds: config.budget_seconds,
    })
}
