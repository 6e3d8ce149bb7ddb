use std::path::PathBuf;
use std::process::Command;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use unify_core::{rollout, DecomposedPolicy};
use unify_ems::{check_dispatch, clairvoyant_cost, generate_ems_instance, make_env, sample_realization, simulate_day, StageDispatch, NUM_FLOWS};
use unify_harness::ems::{ems_data, ems_method, train_ems_method, Budget};
use unify_harness::*;

fn temp_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("unify-harness-{}-{name}", std::process::id()));
    std::fs::remove_dir_all(&d).ok();
    d
}

fn small(experiment: Experiment) -> ExperimentConfig {
    let mut c = ExperimentConfig::preset(experiment);
    c.seed = 3;
    c.deterministic = true;
    c.epochs = 6;
    c.eval_instances = 6;
    c.train.batch_size = 4;
    c.ems.stages = 4;
    c.ems.train_pairs = 12;
    c.ems.tuning_scenarios = 2;
    c.smc.train_pairs = 60;
    c.smc.scenario_grid = vec![1, 4];
    c
}

#[test]
fn gap_examples() {
    assert_eq!(optimality_gap(5.0, 5.0).unwrap(), 0.0);
    assert!((optimality_gap(1.2 * 7.0, 7.0).unwrap() - 0.2).abs() < 1e-12);
    assert!(matches!(optimality_gap(1.0, 0.0), Err(HarnessError::ZeroOracle(_))));
    assert!(matches!(optimality_gap(1.0, -2.0), Err(HarnessError::ZeroOracle(_))));
}

#[test]
fn zero_schedule_has_a_positive_gap() {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    let inst = generate_ems_instance(&mut r, 12);
    let real = sample_realization(&inst, &mut r);
    let cost = simulate_day(&inst, &real, &[0.0; 12]).unwrap().cost;
    let oracle = clairvoyant_cost(&inst, &real).unwrap();
    assert!(optimality_gap(cost, oracle).unwrap() > 0.0);
}

#[test]
fn summary_statistics() {
    let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    assert_eq!(trailing_mean(&[4.0, 2.0, 0.0, 6.0], 2), vec![4.0, 3.0, 1.0, 3.0]);
}

proptest! {
    #[test]
    fn smoothing_stays_within_range(v in prop::collection::vec(-100.0f64..100.0, 1..40), w in 1usize..8) {
        let s = trailing_mean(&v, w);
        let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        prop_assert_eq!(s.len(), v.len());
        prop_assert!(s.iter().all(|&x| x >= lo - 1e-9 && x <= hi + 1e-9));
        prop_assert!(mean_std(&v).1 >= 0.0);
    }

    #[test]
    fn derived_seeds_depend_on_both_inputs(master in any::<u64>(), a in "[a-z]{1,8}", b in "[a-z]{1,8}") {
        prop_assume!(a != b);
        prop_assert_eq!(derive_seed(master, &a), derive_seed(master, &a));
        prop_assert_ne!(derive_seed(master, &a), derive_seed(master, &b));
        prop_assert_ne!(derive_seed(master, &a), derive_seed(master.wrapping_add(1), &a));
    }
}

#[test]
fn config_validation_and_round_trip() {
    for e in Experiment::ALL {
        let c = ExperimentConfig::preset(e);
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        ExperimentConfig::full_preset(e).validate().unwrap();
    }
    let mut c = ExperimentConfig::preset(Experiment::SmcDfl);
    c.methods.clear();
    assert!(c.validate().is_err());
    let mut c = ExperimentConfig::preset(Experiment::SmcDfl);
    c.epochs = 0;
    assert!(c.validate().is_err());
    let mut c = ExperimentConfig::preset(Experiment::EmsTuning);
    c.budget_seconds = Some(-1.0);
    assert!(c.validate().is_err());
    let mut c = ExperimentConfig::preset(Experiment::EmsTuning);
    c.methods.push("pto".into());
    assert!(matches!(c.validate(), Err(HarnessError::UnknownMethod { .. })));
    let mut c = ExperimentConfig::preset(Experiment::SmcStochastic);
    c.smc.scenario_grid = vec![0, 5];
    assert!(c.validate().is_err());
    assert!("ems-nothing".parse::<Experiment>().is_err());
    assert_eq!(ExperimentConfig::full_preset(Experiment::EmsTuning).epochs, 37);
    assert_eq!(ExperimentConfig::full_preset(Experiment::EmsConstraints).epochs, 19);
    assert_eq!(ExperimentConfig::full_preset(Experiment::SmcDfl).epochs, 10_000);
}

#[test]
fn tuning_pipeline_records() {
    let c = small(Experiment::EmsTuning);
    let out = run_ems_tuning(&c).unwrap();
    assert_eq!(out.find("tuning", RecordKind::Baseline).count(), 1);
    assert!(out.records.iter().all(|r| r.gap_mean >= -1e-9 && r.gap_std >= 0.0));
    for m in ["unify-single-step", "unify-sequential"] {
        assert_eq!(out.curve(m).len(), c.epochs);
        assert_eq!(out.find(m, RecordKind::Untrained).count(), 1);
        assert_eq!(out.find(m, RecordKind::Trained).count(), 1);
    }
}

#[test]
fn timed_training_respects_the_budget() {
    let mut c = small(Experiment::EmsTuning);
    c.deterministic = false;
    c.budget_seconds = Some(0.5);
    c.methods = vec!["unify-single-step".into()];
    let out = run_ems_tuning(&c).unwrap();
    let trained = out.find("unify-single-step", RecordKind::Trained).next().unwrap();
    assert!(trained.seconds <= 0.5 * 1.05, "{}", trained.seconds);
    assert!(!out.curve("unify-single-step").is_empty());
}

#[test]
fn completed_episodes_balance_power() {
    let c = small(Experiment::EmsConstraints);
    let data = ems_data(&c).unwrap();
    for m in ["rl", "safety-layer", "unify-sequential"] {
        let (agent, records) = train_ems_method(&c, &data, m, Budget::Epochs(3)).unwrap();
        if m != "rl" {
            assert!(records.iter().all(|r| r.failures.unwrap_or(0) == 0));
        }
        let (variant, layer) = ems_method(m, &data.test[0].instance).unwrap();
        let mut env = make_env(variant, c.ems.stages, data.test[0].instance.capacity);
        for day in &data.test {
            let mut pi = DecomposedPolicy::new(agent.greedy(), layer);
            let traj = rollout(&mut pi, &mut env, day, 0).unwrap();
            if traj.failed {
                continue;
            }
            let mut gamma = day.instance.initial_charge;
            let dispatch: Vec<StageDispatch> = traj
                .steps
                .iter()
                .map(|s| {
                    let f: [f64; NUM_FLOWS] = std::array::from_fn(|g| s.decision.values[g]);
                    let next = gamma + day.instance.efficiency * f[0];
                    let d = StageDispatch { flows: f, gamma, gamma_next: next };
                    gamma = next;
                    d
                })
                .collect();
            check_dispatch(&day.instance, &day.realization, &dispatch).unwrap();
        }
    }
}

#[test]
fn smc_dfl_reports_mape_and_oracle_dominance() {
    let mut c = small(Experiment::SmcDfl);
    c.smc.train_pairs = 500;
    let out = run_smc_dfl(&c).unwrap();
    let pto = out.find("pto", RecordKind::Baseline).next().unwrap();
    assert_eq!(pto.mape.len(), c.smc.elements);
    assert!(pto.mape.iter().all(|&m| m < 15.0), "{:?}", pto.mape);
    let oracle = out.find("posterior", RecordKind::Oracle).next().unwrap();
    for r in &out.records {
        if r.kind != RecordKind::Epoch {
            assert!(r.cost_mean >= oracle.cost_mean - 1e-9);
        }
    }
}

#[test]
fn unify_is_flat_across_the_scenario_grid() {
    let out = run_smc_stochastic(&small(Experiment::SmcStochastic)).unwrap();
    let unify: Vec<_> = out.records.iter().filter(|r| r.method == "unify" && r.scenarios.is_some()).collect();
    assert_eq!(unify.len(), 2);
    assert_eq!(unify[0].cost_mean, unify[1].cost_mean);
    for m in ["saa", "pto-saa"] {
        let s: Vec<_> = out.records.iter().filter(|r| r.method == m).collect();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|r| r.runtime_ratio.is_some_and(|x| x > 0.0)));
    }
}

#[test]
fn changing_one_method_seed_leaves_the_others_alone() {
    let c = small(Experiment::EmsConstraints);
    let mut d = c.clone();
    d.method_seeds.insert("rl".into(), 12345);
    let (a, b) = (run_ems_constraints(&c).unwrap(), run_ems_constraints(&d).unwrap());
    let strip = |o: &ExperimentOutput, m: &str| -> Vec<(f64, f64, Option<usize>)> {
        o.records.iter().filter(|r| r.method == m).map(|r| (r.gap_mean, r.cost_mean, r.failures)).collect()
    };
    for m in ["safety-layer", "unify-sequential", "clairvoyant"] {
        assert_eq!(strip(&a, m), strip(&b, m), "{m}");
    }
    assert_ne!(strip(&a, "rl"), strip(&b, "rl"));
}

#[test]
fn report_files() {
    let c = small(Experiment::EmsConstraints);
    let out = run_ems_constraints(&c).unwrap();
    let dir = temp_dir("report");
    let files = emit_report(&out, &c, &dir, 1.0).unwrap();
    assert!(files.iter().all(|f| f.exists()));
    let curves = std::fs::read_to_string(dir.join("ems-constraints_curves.csv")).unwrap();
    let mut lines = curves.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,epoch,episodes,gap_mean,gap_std,failures,cost_mean,cost_std,oracle_mean"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), c.epochs * c.methods.len());
    for row in &rows {
        let cells: Vec<&str> = row.split(',').collect();
        let cost: f64 = cells[6].parse().unwrap();
        assert!(cost.is_finite());
    }
    let manifest = load_manifest(&dir.join("manifest.json")).unwrap();
    assert_eq!(manifest.config, c);
    assert_eq!(manifest.method_seeds.len(), c.methods.len());

    let again = temp_dir("report-again");
    write_series(&load_records(&dir.join("records.json")).unwrap(), &again).unwrap();
    for f in ["ems-constraints_curves.csv", "ems-constraints_summary.csv"] {
        assert_eq!(std::fs::read(dir.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap());
    }
    std::fs::remove_dir_all(&dir).ok();
    std::fs::remove_dir_all(&again).ok();
}

#[test]
fn cli_round_trip() {
    let exe = env!("CARGO_BIN_EXE_unify");
    let dir = temp_dir("cli");
    let run = |args: &[&str]| {
        let out = Command::new(exe).args(args).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8_lossy(&out.stdout).into_owned()
    };
    let data = dir.join("data");
    run(&["generate", "smc", "--count", "20", "--seed", "4", "--out", data.to_str().unwrap()]);
    assert!(data.join("instance.toml").exists() && data.join("dataset.csv").exists());

    let cfg_path = dir.join("smc.toml");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(&cfg_path, small(Experiment::SmcDfl).to_toml()).unwrap();
    let cfg = cfg_path.to_str().unwrap();
    let exp_dir = dir.join("exp");
    run(&["experiment", "smc-dfl", "--config", cfg, "--out", exp_dir.to_str().unwrap(), "--deterministic"]);
    assert!(exp_dir.join("smc-dfl_summary.csv").exists());

    let train_dir = dir.join("train");
    run(&["train", "smc-dfl", "--config", cfg, "--out", train_dir.to_str().unwrap()]);
    let ckpt = train_dir.join("unify.checkpoint.json");
    assert!(ckpt.exists());
    let eval = run(&["evaluate", "smc-dfl", "--config", cfg, "--checkpoint", ckpt.to_str().unwrap(), "--out", dir.join("eval").to_str().unwrap()]);
    assert!(eval.contains("unify"));
    run(&["baseline", "smc-dfl", "--config", cfg, "--out", dir.join("base").to_str().unwrap()]);
    let rebuilt = dir.join("rebuilt");
    run(&["report", "--input", exp_dir.to_str().unwrap(), "--out", rebuilt.to_str().unwrap()]);
    assert_eq!(
        std::fs::read(exp_dir.join("smc-dfl_curves.csv")).unwrap(),
        std::fs::read(rebuilt.join("smc-dfl_curves.csv")).unwrap()
    );

    let bad = Command::new(exe).args(["experiment", "nope"]).output().unwrap();
    assert!(!bad.status.success());
    std::fs::remove_dir_all(&dir).ok();
}
