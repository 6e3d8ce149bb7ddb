use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unify_core::{rollout, DecomposedPolicy, Decision, Environment, Observation, OptLayer, VirtualParams};
use unify_ems::*;
use unify_opt::{kkt_residuals, solve_lp};
use unify_oracles::{lp_vertex_enumeration, projection_active_set};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flat-profile instance with the given prices and battery.
fn flat(n: usize, res: f64, load: f64, buy: f64, sell: f64, gamma1: f64) -> EmsInstance {
    EmsInstance {
        res_forecast: vec![res; n],
        load_forecast: vec![load; n],
        buy_price: vec![buy; n],
        sell_price: vec![sell; n],
        diesel_cost: 0.2,
        diesel_max: 100.0,
        storage_power: 100.0,
        capacity: 200.0,
        efficiency: 0.9,
        initial_charge: gamma1,
    }
}

/// The stage LP with the purchase variable capped so every bound is finite.
fn enumerate_stage(inst: &EmsInstance, gamma: f64, c0: f64, res: f64, load: f64) -> Vec<f64> {
    let mut lp = build_online_lp(inst, 0, gamma, c0, res, load);
    lp.set_bounds(2, 0.0, load + inst.storage_power + 1.0);
    lp_vertex_enumeration(&lp).unwrap().1
}

#[test]
fn generator_profiles() {
    let inst = generate_ems_instance(&mut rng(1), 96);
    assert_eq!(inst.n(), 96);
    assert!(inst.res_forecast.iter().chain(&inst.load_forecast).all(|&v| v >= 0.0));
    assert!(inst.buy_price.iter().zip(&inst.sell_price).all(|(b, s)| b >= s));
    inst.check().unwrap();
    assert_eq!(inst, generate_ems_instance(&mut rng(1), 96));
    assert_ne!(inst, generate_ems_instance(&mut rng(2), 96));
}

#[test]
fn realization_noise_matches_the_confidence_interval() {
    let inst = flat(1, 100.0, 200.0, 0.1, 0.05, 0.0);
    let mut r = rng(3);
    let draws: Vec<f64> = (0..40_000).map(|_| sample_realization(&inst, &mut r).load[0]).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / draws.len() as f64;
    let sigma = noise_std(200.0);
    assert!((mean - 200.0).abs() < 4.0 * sigma / 200.0);
    assert!((var.sqrt() / sigma - 1.0).abs() < 0.03);
    let inside = draws.iter().filter(|d| (*d - 200.0).abs() <= 20.0).count() as f64 / draws.len() as f64;
    assert!((inside - 0.95).abs() < 0.01, "coverage {inside}");
}

#[test]
fn myopic_stage_sells_surplus_instead_of_storing() {
    let inst = flat(1, 300.0, 100.0, 0.1, 0.05, 50.0);
    let d = solve_stage(&inst, 0, 50.0, 0.0, 300.0, 100.0).unwrap();
    let oracle = enumerate_stage(&inst, 50.0, 0.0, 300.0, 100.0);
    assert!(d.flows[STORAGE] <= 0.0);
    assert!((d.flows[STORAGE] - oracle[0]).abs() < 1e-7);
    let sold = -d.flows[GRID];
    assert!((sold - (200.0 - d.flows[STORAGE])).abs() < 1e-7);
    assert!((sold - (oracle[3] - oracle[2])).abs() < 1e-7);
}

#[test]
fn profitable_storing_fills_the_battery() {
    let mut inst = flat(1, 600.0, 100.0, 0.1, 0.05, 0.0);
    inst.storage_power = 500.0;
    let c0 = -(0.05 + 1.0);
    let d = solve_stage(&inst, 0, 0.0, c0, 600.0, 100.0).unwrap();
    let oracle = enumerate_stage(&inst, 0.0, c0, 600.0, 100.0);
    let window = inst.capacity / inst.efficiency;
    assert!((d.flows[STORAGE] - window).abs() < 1e-7);
    assert!((oracle[0] - window).abs() < 1e-7);
    assert!((d.gamma_next - inst.capacity).abs() < 1e-9);
}

#[test]
fn idle_stage_has_no_flows() {
    let inst = flat(1, 0.0, 0.0, 0.1, 0.05, 0.0);
    let d = solve_stage(&inst, 0, 0.0, 0.0, 0.0, 0.0).unwrap();
    assert!(d.flows.iter().all(|v| v.abs() < 1e-12));
    assert_eq!(inst.stage_cost(0, &d.flows), 0.0);
}

#[test]
fn very_negative_virtual_cost_charges_at_the_bound() {
    let inst = flat(1, 50.0, 150.0, 0.2, 0.1, 40.0);
    let d = solve_stage(&inst, 0, 40.0, -1e6, 50.0, 150.0).unwrap();
    let (_, hi) = inst.storage_bounds(40.0);
    assert!((d.flows[STORAGE] - hi).abs() < 1e-9);
}

#[test]
fn stage_lp_matches_vertex_enumeration() {
    let mut r = rng(5);
    for _ in 0..100 {
        let inst = flat(1, r.random_range(0.0..300.0), r.random_range(0.0..300.0), 0.2, 0.08, 0.0);
        let gamma = r.random_range(0.0..200.0);
        let c0 = r.random_range(-0.5..0.5);
        let (res, load) = (inst.res_forecast[0], inst.load_forecast[0]);
        let lp = build_online_lp(&inst, 0, gamma, c0, res, load);
        let got = solve_lp(&lp).unwrap();
        let mut capped = lp.clone();
        capped.set_bounds(2, 0.0, load + inst.storage_power + 1.0);
        let (best, _) = lp_vertex_enumeration(&capped).unwrap();
        assert!((got.objective - best).abs() < 1e-6, "{} vs {best}", got.objective);
    }
}

#[test]
fn stage_lp_multipliers_satisfy_kkt() {
    let mut r = rng(6);
    for _ in 0..50 {
        let inst = generate_ems_instance(&mut r, 8);
        let k = r.random_range(0..8);
        let gamma = r.random_range(0.0..inst.capacity);
        let c0 = r.random_range(-0.5..0.5);
        let real = sample_realization(&inst, &mut r);
        let (_, lp, res) = solve_stage_lp(&inst, k, gamma, c0, real.res[k], real.load[k]).unwrap();
        let kkt = kkt_residuals(&lp, &res).unwrap();
        assert!(kkt.stationarity <= 1e-6 && kkt.complementarity <= 1e-6, "{kkt:?}");
        assert!(kkt.max() <= 1e-6, "{kkt:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn lowering_the_virtual_cost_never_stores_less(
        res in 0.0f64..400.0, load in 0.0f64..400.0, gamma in 0.0f64..200.0,
        c_hi in -0.6f64..0.6, drop in 0.0f64..0.6,
    ) {
        let inst = flat(1, res, load, 0.2, 0.08, 0.0);
        let a = solve_stage(&inst, 0, gamma, c_hi, res, load).unwrap();
        let b = solve_stage(&inst, 0, gamma, c_hi - drop, res, load).unwrap();
        prop_assert!(b.flows[STORAGE] >= a.flows[STORAGE] - 1e-9);
    }

    #[test]
    fn projection_matches_active_set_enumeration(
        y in prop::collection::vec(-300.0f64..300.0, 4),
        gamma in 0.0f64..200.0, res in 0.0f64..300.0, load in 0.0f64..400.0,
    ) {
        let inst = flat(1, res, load, 0.2, 0.1, 0.0);
        let (lo, hi) = supply_bounds(&inst, gamma, res);
        let z = project_onto_balance(&y, &lo, &hi, load).unwrap();
        let oracle = projection_active_set(&y, &lo, &hi, load).unwrap();
        for (a, b) in z.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-7, "{z:?} vs {oracle:?}");
        }
        prop_assert!((z.iter().sum::<f64>() - load).abs() <= 1e-9);
    }
}

#[test]
fn projection_examples() {
    let z = project_onto_balance(&[2.0, 2.0], &[0.0, 0.0], &[3.0, 3.0], 3.0).unwrap();
    assert!((z[0] - 1.5).abs() < 1e-9 && (z[1] - 1.5).abs() < 1e-9);
    let y = [1.0, 0.5, 1.5];
    let z = project_onto_balance(&y, &[0.0; 3], &[2.0; 3], 3.0).unwrap();
    for (a, b) in z.iter().zip(&y) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!(matches!(
        project_onto_balance(&[0.0, 0.0], &[0.0, 0.0], &[1.0, 1.0], 3.0),
        Err(EmsError::EmptyFeasible(_))
    ));
}

#[test]
fn projected_dispatch_is_feasible() {
    let inst = flat(1, 100.0, 250.0, 0.2, 0.1, 180.0);
    let d = safety_layer_project(&inst, 180.0, &[150.0, 500.0, -50.0, 30.0], 100.0, 250.0).unwrap();
    assert!((d.delivered() - 250.0).abs() < 1e-6);
    let (lo, hi) = inst.storage_bounds(180.0);
    assert!(d.flows[STORAGE] >= lo - 1e-9 && d.flows[STORAGE] <= hi + 1e-9);
    assert!(d.flows[RES] <= 100.0 + 1e-9);
}

fn random_schedule(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-0.4..0.3)).collect()
}

#[test]
fn simulated_days_keep_every_invariant() {
    let mut r = rng(7);
    let inst = generate_ems_instance(&mut r, 96);
    for _ in 0..10 {
        let real = sample_realization(&inst, &mut r);
        let schedule = random_schedule(&mut r, 96);
        let out = simulate_day(&inst, &real, &schedule).unwrap();
        check_dispatch(&inst, &real, &out.dispatch).unwrap();
        let recomputed: f64 = out
            .dispatch
            .iter()
            .enumerate()
            .map(|(k, d)| {
                let [_, _, x2, x3] = d.flows;
                inst.buy_price[k] * x2.max(0.0) - inst.sell_price[k] * (-x2).max(0.0) + inst.diesel_cost * x3
            })
            .sum();
        assert!((recomputed - out.cost).abs() < 1e-9);
        let stored: f64 = out.dispatch.iter().map(|d| d.flows[STORAGE]).sum();
        assert!((out.final_charge() - inst.initial_charge - inst.efficiency * stored).abs() < 1e-9);
    }
}

#[test]
fn zero_schedule_is_the_stagewise_myopic_heuristic() {
    let mut r = rng(8);
    let inst = generate_ems_instance(&mut r, 24);
    let real = sample_realization(&inst, &mut r);
    let out = simulate_day(&inst, &real, &[0.0; 24]).unwrap();
    let mut gamma = inst.initial_charge;
    let mut cost = 0.0;
    for k in 0..24 {
        let d = solve_stage(&inst, k, gamma, 0.0, real.res[k], real.load[k]).unwrap();
        cost += inst.stage_cost(k, &d.flows);
        gamma = d.gamma_next;
    }
    assert_eq!(out.cost, cost);
    assert!(matches!(simulate_day(&inst, &real, &[0.0; 3]), Err(EmsError::ScheduleLength { .. })));
}

#[test]
fn myopic_heuristic_empties_the_battery() {
    let mut r = rng(9);
    for _ in 0..5 {
        let inst = generate_ems_instance(&mut r, 24);
        let real = sample_realization(&inst, &mut r);
        let out = simulate_day(&inst, &real, &[0.0; 24]).unwrap();
        let mut reachable = inst.initial_charge;
        for _ in 0..24 {
            reachable = (reachable - inst.efficiency * inst.storage_power).max(0.0);
        }
        assert!((out.final_charge() - reachable).abs() < 1e-9);
        assert!(out.dispatch.iter().all(|d| d.flows[STORAGE] <= 1e-12));
    }
}

fn cheap_then_expensive() -> EmsInstance {
    EmsInstance {
        res_forecast: vec![0.0, 0.0],
        load_forecast: vec![100.0, 100.0],
        buy_price: vec![0.05, 0.30],
        sell_price: vec![0.025, 0.15],
        diesel_cost: 0.4,
        diesel_max: 100.0,
        storage_power: 100.0,
        capacity: 200.0,
        efficiency: 0.9,
        initial_charge: 0.0,
    }
}

#[test]
fn negative_virtual_cost_beats_myopia_on_two_stages() {
    let inst = cheap_then_expensive();
    let real = EmsRealization::exact(&inst);
    let myopic = simulate_day(&inst, &real, &[0.0, 0.0]).unwrap().cost;
    assert!((myopic - 35.0).abs() < 1e-9);
    let best = (0..=30)
        .map(|i| -0.01 * i as f64)
        .map(|c| (c, simulate_day(&inst, &real, &[c, 0.0]).unwrap().cost))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!(best.0 < 0.0 && best.1 < myopic - 1.0, "{best:?}");
    assert!((best.1 - 10.0).abs() < 1e-9);
    assert!((clairvoyant_cost(&inst, &real).unwrap() - 10.0).abs() < 1e-9);
}

#[test]
fn clairvoyant_lower_bounds_every_schedule() {
    let mut r = rng(10);
    let inst = generate_ems_instance(&mut r, 12);
    let real = sample_realization(&inst, &mut r);
    let oracle = clairvoyant_cost(&inst, &real).unwrap();
    for _ in 0..100 {
        let s = random_schedule(&mut r, 12);
        assert!(oracle <= simulate_day(&inst, &real, &s).unwrap().cost + 1e-9);
    }
    let horizon = simulate_day_with(&inst, &real, &[0.0; 12], OnlineMode::HorizonSummed).unwrap();
    check_dispatch(&inst, &real, &horizon.dispatch).unwrap();
    assert!(oracle <= horizon.cost + 1e-9);
}

#[test]
fn clairvoyant_matches_myopia_when_storage_cannot_help() {
    let inst = flat(6, 50.0, 200.0, 0.15, 0.07, 0.0);
    let real = EmsRealization::exact(&inst);
    let myopic = simulate_day(&inst, &real, &[0.0; 6]).unwrap().cost;
    assert!((clairvoyant_cost(&inst, &real).unwrap() - myopic).abs() < 1e-9);

    let mut r = rng(11);
    let one = generate_ems_instance(&mut r, 1);
    let real = sample_realization(&one, &mut r);
    let single = simulate_day(&one, &real, &[0.0]).unwrap().cost;
    assert!((clairvoyant_cost(&one, &real).unwrap() - single).abs() < 1e-9);
}

fn day(seed: u64, n: usize) -> EmsDay {
    let mut r = rng(seed);
    let instance = generate_ems_instance(&mut r, n);
    let realization = sample_realization(&instance, &mut r);
    EmsDay { instance, realization }
}

fn constant(v: Vec<f64>) -> impl FnMut(&Observation) -> VirtualParams {
    move |_: &Observation| VirtualParams(v.clone())
}

#[test]
fn single_step_env_pays_the_true_cost() {
    let d = day(12, 8);
    let mut env = make_env(EmsVariant::SingleStep, 8, d.instance.capacity);
    let layer = ScheduleLayer::new(virtual_cost_scale(&d.instance));
    let mut policy = DecomposedPolicy::new(constant(vec![0.0; 8]), &layer);
    let traj = rollout(&mut policy, &mut env, &d, 0).unwrap();
    let myopic = simulate_day(&d.instance, &d.realization, &[0.0; 8]).unwrap().cost;
    assert_eq!(traj.steps.len(), 1);
    assert!((traj.total - myopic).abs() < 1e-9);
    assert_eq!(traj.steps[0].observation.len(), 16);
}

#[test]
fn sequential_env_observes_charge_forecasts_and_stage() {
    let d = day(13, 6);
    let mut env = make_env(EmsVariant::Sequential, 6, d.instance.capacity);
    let obs = env.reset(&d, 0).unwrap();
    assert_eq!(obs.len(), 3 * 6 + 1);
    assert_eq!(obs.values()[0], d.instance.initial_charge);
    assert_eq!(obs.values()[13], 1.0);
    let layer = StageCostLayer {
        scale: virtual_cost_scale(&d.instance),
    };
    let mut policy = DecomposedPolicy::new(constant(vec![0.0]), &layer);
    let traj = rollout(&mut policy, &mut env, &d, 0).unwrap();
    let myopic = simulate_day(&d.instance, &d.realization, &[0.0; 6]).unwrap().cost;
    assert_eq!(traj.steps.len(), 6);
    assert!((traj.total - myopic).abs() < 1e-9);
}

#[test]
fn end_to_end_env_flags_battery_overflow() {
    let mut d = day(14, 4);
    d.instance.initial_charge = d.instance.capacity;
    let mut env = make_env(EmsVariant::EndToEnd, 4, d.instance.capacity);
    env.reset(&d, 0).unwrap();
    let z = FlowLayer.solve(env.state(), &VirtualParams(vec![1.0, 1.0, -1.0])).unwrap();
    assert!(!z.feasible);
    let t = env.step(&z).unwrap();
    assert!(t.done && t.failed);
    assert_eq!(t.cost, INFEASIBLE_COST);
    assert!(env.step(&z).is_err());

    let mut policy = DecomposedPolicy::new(constant(vec![1.0, 0.0, 0.0]), FlowLayer);
    let traj = rollout(&mut policy, &mut env, &d, 0).unwrap();
    assert!(traj.failed);
    assert_eq!(traj.total, INFEASIBLE_COST);
}

#[test]
fn end_to_end_env_charges_the_day_cost_at_the_end() {
    let d = day(15, 4);
    let mut env = make_env(EmsVariant::EndToEnd, 4, d.instance.capacity);
    let mut policy = DecomposedPolicy::new(constant(vec![0.0, 1.0, -1.0]), FlowLayer);
    let traj = rollout(&mut policy, &mut env, &d, 0).unwrap();
    assert!(!traj.failed);
    let costs: Vec<f64> = traj.costs().collect();
    assert!(costs[..3].iter().all(|&c| c == 0.0));
    let expected: f64 = traj
        .steps
        .iter()
        .enumerate()
        .map(|(k, s)| d.instance.stage_cost(k, &s.decision.values))
        .sum();
    assert!((costs[3] - expected).abs() < 1e-9);
}

#[test]
fn safety_env_never_fails() {
    let mut r = rng(16);
    let d = day(16, 6);
    let mut env = make_env(EmsVariant::Safety, 6, d.instance.capacity);
    for _ in 0..50 {
        let a: Vec<f64> = (0..3).map(|_| r.random_range(-3.0..3.0)).collect();
        let mut policy = DecomposedPolicy::new(constant(a), SafetyLayer);
        let traj = rollout(&mut policy, &mut env, &d, 0).unwrap();
        assert!(!traj.failed);
        let dispatch: Vec<StageDispatch> = {
            let mut gamma = d.instance.initial_charge;
            traj.steps
                .iter()
                .map(|s| {
                    let flows = [s.decision.values[0], s.decision.values[1], s.decision.values[2], s.decision.values[3]];
                    let next = gamma + d.instance.efficiency * flows[STORAGE];
                    let out = StageDispatch { flows, gamma, gamma_next: next };
                    gamma = next;
                    out
                })
                .collect()
        };
        check_dispatch(&d.instance, &d.realization, &dispatch).unwrap();
    }
}

#[test]
fn env_rejects_wrong_sizes() {
    let d = day(17, 4);
    let mut env = make_env(EmsVariant::Sequential, 5, d.instance.capacity);
    assert!(env.reset(&d, 0).is_err());
    let mut env = make_env(EmsVariant::Sequential, 4, d.instance.capacity);
    env.reset(&d, 0).unwrap();
    assert!(env.step(&Decision::feasible(vec![0.0; 3])).is_err());
}

#[test]
fn single_stage_tuning_cannot_beat_myopia() {
    let mut r = rng(18);
    let inst = generate_ems_instance(&mut r, 1);
    let (tuned, scenarios) = tuning_baseline(&inst, 1, &mut r, &TuningOptions::default()).unwrap();
    let tuned_cost = simulate_day(&inst, &scenarios[0], &tuned.schedule).unwrap().cost;
    let myopic = simulate_day(&inst, &scenarios[0], &[0.0]).unwrap().cost;
    assert!((tuned_cost - myopic).abs() < 1e-6, "{tuned_cost} vs {myopic}");
}

#[test]
fn tuned_schedule_replays_through_the_online_heuristic() {
    let mut r = rng(19);
    let inst = generate_ems_instance(&mut r, 4);
    let (tuned, scenarios) = tuning_baseline(&inst, 3, &mut r, &TuningOptions::default()).unwrap();
    for (w, real) in scenarios.iter().enumerate() {
        let out = simulate_day(&inst, real, &tuned.schedule).unwrap();
        for (k, d) in out.dispatch.iter().enumerate() {
            for g in 0..NUM_FLOWS {
                assert!(
                    (d.flows[g] - tuned.flows[w][k][g]).abs() <= 1e-5,
                    "scenario {w} stage {k} flow {g}: {} vs {}",
                    d.flows[g],
                    tuned.flows[w][k][g]
                );
            }
        }
    }
    let tuned_cost = average_cost(&inst, &scenarios, &tuned.schedule).unwrap();
    let zero = average_cost(&inst, &scenarios, &[0.0; 4]).unwrap();
    assert!((tuned_cost - tuned.objective).abs() < 1e-5);
    assert!(tuned_cost <= zero + 1e-9);
    assert!(tuned.bound <= tuned.objective + 1e-6);
}

#[test]
fn tuning_finds_the_storage_arbitrage() {
    let inst = cheap_then_expensive();
    let real = EmsRealization::exact(&inst);
    let tuned = tune_schedule(&inst, std::slice::from_ref(&real), &TuningOptions::default()).unwrap();
    assert!(tuned.proven_optimal);
    assert!(tuned.schedule[0] < 0.0);
    assert!((simulate_day(&inst, &real, &tuned.schedule).unwrap().cost - 10.0).abs() < 1e-6);
}

#[test]
fn io_round_trips() {
    let d = day(20, 6);
    let back = instance_from_toml(&instance_to_toml(&d.instance)).unwrap();
    assert_eq!(back, d.instance);
    let back = realization_from_toml(&realization_to_toml(&d.realization)).unwrap();
    assert_eq!(back, d.realization);
    let s = vec![-0.25, 0.0, 1e-3, 0.125];
    assert_eq!(schedule_from_text(&schedule_to_text(&s)).unwrap(), s);
    assert!(schedule_from_text("0.1\nabc\n").is_err());
    let bad = instance_to_toml(&d.instance).replace("kWh per stage", "MWh");
    assert!(instance_from_toml(&bad).is_err());
}
