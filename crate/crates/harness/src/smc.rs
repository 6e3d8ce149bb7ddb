//! The two set multi-cover pipelines: decision-focused learning against
//! predict-then-optimize, and the scenario sweep against SAA.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use unify_core::{evaluate_policy, DecomposedPolicy, Model, OptLayer};
use unify_learner::Agent;
use unify_smc::{
    fit_rate_model, generate_dataset, generate_instance, make_smc_env, observe, posterior_optimal,
    predict_then_optimize, rate_mape, recourse_cost, sample_poisson, solve_saa, Dataset, PtoMode, SaaForm, SmcDraw,
    SmcInstance, SmcLayer,
};

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::metrics::{ExperimentOutput, MetricsRecord, RecordKind};
use crate::seeds::{derive_seed, stream};

#[derive(Debug, Clone)]
pub struct SmcData {
    pub instance: SmcInstance,
    /// Historical pairs: training set of the learned and fitted methods.
    pub history: Dataset,
    pub history_oracle: Vec<f64>,
    pub test: Vec<SmcDraw>,
    pub test_oracle: Vec<f64>,
}

pub fn smc_data(config: &ExperimentConfig) -> Result<SmcData, HarnessError> {
    let s = &config.smc;
    let instance = generate_instance(&mut stream(config.data_seed("instance"), "smc"), s.elements, s.sets, s.density)?;
    let history = generate_dataset(&instance, s.train_pairs, &mut stream(config.data_seed("train"), "smc"));
    let history_oracle = history
        .rows
        .iter()
        .map(|(_, d)| posterior_optimal(&instance, d))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut rng = stream(config.data_seed("test"), "smc");
    let mut test = Vec::with_capacity(config.eval_instances);
    let mut test_oracle = Vec::with_capacity(config.eval_instances);
    while test.len() < config.eval_instances {
        let draw = SmcDraw::sample(&instance, &mut rng);
        let c = posterior_optimal(&instance, &draw.demand)?;
        if c > 0.0 {
            test.push(draw);
            test_oracle.push(c);
        }
    }
    Ok(SmcData {
        instance,
        history,
        history_oracle,
        test,
        test_oracle,
    })
}

pub fn evaluate_smc_agent(method: &str, kind: RecordKind, agent: &Agent, data: &SmcData) -> Result<MetricsRecord, HarnessError> {
    let mut env = make_smc_env(data.instance.clone());
    let mut policy = DecomposedPolicy::new(agent.greedy(), SmcLayer::new(data.instance.clone()));
    let seeds = vec![0; data.test.len()];
    let s = evaluate_policy(&mut policy, &mut env, &data.test, &seeds)?;
    MetricsRecord::from_costs(method, kind, &s.per_instance, &data.test_oracle)
}

/// Trains the UNIFY policy on task loss over the historical pairs.
pub fn train_smc_unify(config: &ExperimentConfig, data: &SmcData, method: &str) -> Result<(Agent, Vec<MetricsRecord>), HarnessError> {
    let mut env = make_smc_env(data.instance.clone());
    let layer = SmcLayer::new(data.instance.clone());
    let mut agent = Agent::new(1, data.instance.n_elements, config.train_config(method))?;
    let mut records = vec![evaluate_smc_agent(method, RecordKind::Untrained, &agent, data)?];
    let budget = config.budget_seconds.filter(|_| !config.deterministic);
    let start = Instant::now();
    while agent.epoch < config.epochs && budget.is_none_or(|b| start.elapsed().as_secs_f64() < b) {
        let mut drawn = Vec::with_capacity(config.train.batch_size);
        let mut draw = |rng: &mut ChaCha8Rng| {
            let i = rng.random_range(0..data.history.len());
            drawn.push(i);
            let (o, d) = &data.history.rows[i];
            (SmcDraw { o: *o, demand: d.clone() }, 0)
        };
        let stats = agent.train_epoch(&mut env, &layer, &mut draw)?;
        let oracle: Vec<f64> = drawn.iter().map(|&i| data.history_oracle[i]).collect();
        records.push(
            MetricsRecord::from_costs(method, RecordKind::Epoch, &stats.costs, &oracle)?
                .with_epoch(stats.epoch)
                .with_seconds(start.elapsed().as_secs_f64()),
        );
    }
    let secs = start.elapsed().as_secs_f64();
    records.push(evaluate_smc_agent(method, RecordKind::Trained, &agent, data)?.with_seconds(secs));
    Ok((agent, records))
}

fn oracle_record(data: &SmcData) -> Result<MetricsRecord, HarnessError> {
    MetricsRecord::from_costs("posterior", RecordKind::Oracle, &data.test_oracle, &data.test_oracle)
}

/// Least-squares rate fit, its per-element MAPE, and point-mode costs.
pub fn pto_point(config: &ExperimentConfig, data: &SmcData) -> Result<MetricsRecord, HarnessError> {
    let slopes = fit_rate_model(&data.history)?;
    let mut rng = stream(config.method_seed("pto"), "point");
    let start = Instant::now();
    let costs = data
        .test
        .iter()
        .map(|d| {
            predict_then_optimize(&data.instance, d.o, &slopes, PtoMode::Point, &mut rng).map(|x| recourse_cost(&data.instance, &x, &d.demand))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let mut r = MetricsRecord::from_costs("pto", RecordKind::Baseline, &costs, &data.test_oracle)?.with_seconds(start.elapsed().as_secs_f64());
    r.mape = rate_mape(&slopes, &data.instance.rate_slopes);
    Ok(r)
}

pub fn run_smc_dfl(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    config.validate()?;
    let data = smc_data(config)?;
    let mut records = vec![oracle_record(&data)?];
    if config.has("pto") {
        records.push(pto_point(config, &data)?);
    }
    if config.has("unify") {
        records.extend(train_smc_unify(config, &data, "unify")?.1);
    }
    Ok(ExperimentOutput {
        experiment: config.experiment,
        records,
        budget_seconds: config.budget_seconds,
    })
}

/// Per test instance, the scenarios of the largest grid point are drawn
/// once and smaller counts use a prefix, so the curves share randomness.
fn saa_series(
    config: &ExperimentConfig,
    data: &SmcData,
    method: &str,
    mut scenarios_for: impl FnMut(usize, &mut ChaCha8Rng, usize) -> Vec<Vec<f64>>,
) -> Result<Vec<(usize, Vec<f64>, f64)>, HarnessError> {
    let grid = &config.smc.scenario_grid;
    let max = grid.iter().copied().max().unwrap_or(1);
    let mut costs = vec![Vec::with_capacity(data.test.len()); grid.len()];
    let mut seconds = vec![0.0; grid.len()];
    let seed = config.method_seed(method);
    for (i, draw) in data.test.iter().enumerate() {
        let mut rng = stream(derive_seed(seed, "instance"), &i.to_string());
        let pool = scenarios_for(i, &mut rng, max);
        for (g, &s) in grid.iter().enumerate() {
            let start = Instant::now();
            let x = solve_saa(&data.instance, &pool[..s], SaaForm::Compact)?;
            seconds[g] += start.elapsed().as_secs_f64();
            costs[g].push(recourse_cost(&data.instance, &x, &draw.demand));
        }
    }
    let n = data.test.len() as f64;
    Ok(grid.iter().zip(costs).zip(seconds).map(|((&s, c), t)| (s, c, t / n)).collect())
}

/// Mean greedy inference time (forward pass and deterministic solve) and
/// the costs of the trained policy.
fn unify_inference(agent: &Agent, data: &SmcData) -> Result<(Vec<f64>, f64), HarnessError> {
    let layer = SmcLayer::new(data.instance.clone());
    let mut model = agent.greedy();
    let mut costs = Vec::with_capacity(data.test.len());
    let mut total = 0.0;
    for draw in &data.test {
        let start = Instant::now();
        let y = model.output(&observe(draw.o));
        let z = layer.solve(&(), &y)?;
        total += start.elapsed().as_secs_f64();
        costs.push(recourse_cost(&data.instance, &z.values, &draw.demand));
    }
    Ok((costs, total / data.test.len() as f64))
}

pub fn run_smc_stochastic(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    config.validate()?;
    let data = smc_data(config)?;
    let mut records = vec![oracle_record(&data)?];
    let mut unify_time = None;
    let mut unify_costs = None;
    if config.has("unify") {
        let (agent, curve) = train_smc_unify(config, &data, "unify")?;
        records.extend(curve.into_iter().filter(|r| r.kind != RecordKind::Trained));
        let (costs, t) = unify_inference(&agent, &data)?;
        unify_time = Some(t);
        unify_costs = Some(costs);
    }
    let ratio = |t: f64| unify_time.map(|u| t / u);
    if config.has("saa") {
        let history = &data.history;
        let series = saa_series(config, &data, "saa", |_, rng, k| {
            (0..k).map(|_| history.rows[rng.random_range(0..history.len())].1.clone()).collect()
        })?;
        for (s, costs, t) in series {
            let mut r = MetricsRecord::from_costs("saa", RecordKind::Baseline, &costs, &data.test_oracle)?
                .with_scenarios(s)
                .with_seconds(t);
            r.runtime_ratio = ratio(t);
            records.push(r);
        }
    }
    if config.has("pto-saa") {
        let slopes = fit_rate_model(&data.history)?;
        let series = saa_series(config, &data, "pto-saa", |i, rng, k| {
            let o = data.test[i].o;
            (0..k).map(|_| slopes.iter().map(|a| sample_poisson(a * o, rng)).collect()).collect()
        })?;
        for (s, costs, t) in series {
            let mut r = MetricsRecord::from_costs("pto-saa", RecordKind::Baseline, &costs, &data.test_oracle)?
                .with_scenarios(s)
                .with_seconds(t);
            r.runtime_ratio = ratio(t);
            records.push(r);
        }
    }
    if let (Some(costs), Some(t)) = (unify_costs, unify_time) {
        for &s in &config.smc.scenario_grid {
            let mut r = MetricsRecord::from_costs("unify", RecordKind::Trained, &costs, &data.test_oracle)?
                .with_scenarios(s)
                .with_seconds(t);
            r.runtime_ratio = Some(1.0);
            records.push(r);
        }
    }
    Ok(ExperimentOutput {
        experiment: config.experiment,
        records,
        budget_seconds: config.budget_seconds,
    })
}

/// Mean and standard deviation of the gaps of a record series, by method.
pub fn gap_table(output: &ExperimentOutput, method: &str) -> Vec<(usize, f64, f64)> {
    output
        .records
        .iter()
        .filter(|r| r.method == method)
        .filter_map(|r| r.scenarios.map(|s| (s, r.gap_mean, r.gap_std)))
        .collect()
}

