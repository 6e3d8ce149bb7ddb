use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unify_core::{rollout, DecomposedPolicy, Decision, Environment, Observation, VirtualParams};
use unify_oracles::{for_each_integer_point, mip_enumeration};
use unify_smc::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance without the two-cover rule, small enough to enumerate.
fn tiny_instance(r: &mut ChaCha8Rng, m: usize, n: usize) -> SmcInstance {
    let mut pairs = Vec::new();
    for i in 0..m {
        let j = r.random_range(0..n);
        pairs.push((i, j));
        for j in 0..n {
            if r.random_bool(0.4) {
                pairs.push((i, j));
            }
        }
    }
    let costs = (0..n).map(|_| r.random_range(1..=20) as f64).collect();
    let slopes = (0..m).map(|_| r.random_range(1.0..5.0)).collect();
    SmcInstance::from_pairs(m, n, &pairs, costs, slopes).unwrap()
}

fn enumerate_recourse(inst: &SmcInstance, scenarios: &[Vec<f64>], ub: i64) -> f64 {
    let mut best = f64::INFINITY;
    for_each_integer_point(&vec![0; inst.n_sets], &vec![ub; inst.n_sets], |x| {
        let c = scenarios.iter().map(|d| recourse_cost(inst, x, d)).sum::<f64>() / scenarios.len() as f64;
        best = best.min(c);
    });
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn generated_instances_follow_the_rules(seed in 0u64..10_000, m in 2usize..25, n in 20usize..120) {
        let density = ((2 * m + n) as f64 / (m * n) as f64).max(0.08).min(1.0);
        let inst = generate_instance(&mut rng(seed), m, n, density).unwrap();
        prop_assert!(inst.check().is_ok());
        prop_assert_eq!(inst.ones(), (density * (m * n) as f64).round() as usize);
        for &c in &inst.costs {
            prop_assert!((1.0..=100.0).contains(&c) && c.fract() == 0.0);
        }
        for &a in &inst.rate_slopes {
            prop_assert!((1.0..=5.0).contains(&a));
        }
        for (i, &w) in inst.penalties.iter().enumerate() {
            prop_assert!(w >= 10.0);
            let cheapest = inst.covers[i].iter().map(|&j| inst.costs[j]).fold(f64::INFINITY, f64::min);
            prop_assert!(w >= 10.0 * cheapest);
        }
    }
}

#[test]
fn full_scale_density() {
    let inst = generate_instance(&mut rng(3), 200, 1000, 0.02).unwrap();
    assert_eq!(inst.ones(), 4000);
    assert!(inst.check().is_ok());
}

#[test]
fn too_sparse_generation_is_rejected() {
    assert!(matches!(
        generate_instance(&mut rng(0), 20, 100, 0.02),
        Err(SmcError::InfeasibleGeneration(_))
    ));
}

#[test]
fn penalty_is_ten_times_the_dearest_cover() {
    let inst = SmcInstance::from_pairs(1, 3, &[(0, 0), (0, 2)], vec![7.0, 90.0, 30.0], vec![1.0]).unwrap();
    assert_eq!(inst.penalties, vec![300.0]);
}

#[test]
fn poisson_sampling() {
    let inst = SmcInstance::from_pairs(1, 2, &[(0, 0), (0, 1)], vec![1.0, 1.0], vec![2.0]).unwrap();
    assert_eq!(inst.rates(3.0), vec![6.0]);
    let mut r = rng(8);
    let n = 100_000;
    let mean = (0..n).map(|_| sample_poisson(6.0, &mut r)).sum::<f64>() / n as f64;
    assert!((mean - 6.0).abs() <= 4.0 * (6.0f64 / n as f64).sqrt());
    let big = (0..n).map(|_| sample_poisson(40.0, &mut r)).sum::<f64>() / n as f64;
    assert!((big - 40.0).abs() <= 4.0 * (40.0f64 / n as f64).sqrt() + 0.01);
    assert!((0..1000).all(|_| sample_poisson(1e-12, &mut r) == 0.0));
    let d = sample_demands(&inst, 3.0, &mut r);
    assert!(d[0] >= 0.0 && d[0].fract() == 0.0);
}

#[test]
fn deterministic_model_examples() {
    let inst = generate_instance(&mut rng(1), 20, 100, 0.08).unwrap();
    assert_eq!(solve_deterministic(&inst, &vec![0.0; 20]).unwrap(), vec![0.0; 100]);
    assert_eq!(posterior_optimal(&inst, &vec![0.0; 20]).unwrap(), 0.0);

    let two = SmcInstance::from_pairs(1, 2, &[(0, 0), (0, 1)], vec![5.0, 9.0], vec![1.0]).unwrap();
    let x = solve_deterministic(&two, &[3.0]).unwrap();
    assert_eq!(x, vec![3.0, 0.0]);
    assert_eq!(recourse_cost(&two, &x, &[3.0]), 15.0);

    let mut r = rng(2);
    for _ in 0..20 {
        let draw = SmcDraw::sample(&inst, &mut r);
        let x = solve_deterministic(&inst, &draw.demand).unwrap();
        assert!(covers_demand(&inst, &x, &draw.demand));
    }
}

#[test]
fn deterministic_model_matches_enumeration() {
    let mut r = rng(4);
    for _ in 0..30 {
        let inst = tiny_instance(&mut r, 3, 3);
        let d: Vec<f64> = (0..3).map(|_| r.random_range(0..=4) as f64).collect();
        let mip = build_deterministic_mip(&inst, &d);
        let (oracle, _) = mip_enumeration(&mip).unwrap();
        assert_eq!(posterior_optimal(&inst, &d).unwrap(), oracle);
        assert_eq!(enumerate_recourse(&inst, &[d.clone()], 4), oracle);
    }
}

#[test]
fn recourse_cost_examples() {
    let one = SmcInstance::from_pairs(1, 1, &[(0, 0)], vec![5.0], vec![1.0]).unwrap();
    assert_eq!(one.penalties, vec![50.0]);
    assert_eq!(recourse_cost(&one, &[0.0], &[2.0]), 100.0);
    assert_eq!(recourse_cost(&one, &[3.0], &[2.0]), 15.0);

    let mut r = rng(5);
    for _ in 0..20 {
        let inst = tiny_instance(&mut r, 2, 3);
        let d: Vec<f64> = (0..2).map(|_| r.random_range(0..=3) as f64).collect();
        let best = posterior_optimal(&inst, &d).unwrap();
        for_each_integer_point(&[0; 3], &[3; 3], |x| {
            assert!(best <= recourse_cost(&inst, x, &d) + 1e-9);
        });
    }
}

#[test]
fn saa_models_agree_with_enumeration() {
    let mut r = rng(6);
    for _ in 0..12 {
        let inst = tiny_instance(&mut r, 2, 3);
        let k = r.random_range(1..=3);
        let scen: Vec<Vec<f64>> = (0..k).map(|_| (0..2).map(|_| r.random_range(0..=3) as f64).collect()).collect();
        let oracle = enumerate_recourse(&inst, &scen, 3);
        let mean = |x: &[f64]| scen.iter().map(|d| recourse_cost(&inst, x, d)).sum::<f64>() / k as f64;
        for form in [SaaForm::Indicator, SaaForm::Compact] {
            let x = solve_saa(&inst, &scen, form).unwrap();
            assert!((mean(&x) - oracle).abs() < 1e-9, "{form:?}: {} vs {oracle}", mean(&x));
        }
    }
}

#[test]
fn indicator_model_slack_accounting() {
    let mut r = rng(7);
    for _ in 0..10 {
        let inst = tiny_instance(&mut r, 2, 3);
        let scen: Vec<Vec<f64>> = (0..2).map(|_| (0..2).map(|_| r.random_range(0..=3) as f64).collect()).collect();
        let mip = build_saa_mip(&inst, &scen);
        let res = unify_opt::solve_mip(&mip, 1e-9).unwrap();
        let x = &res.primal[..3];
        let cov = inst.coverage(x);
        let (m, n) = (2, 3);
        for (w, d) in scen.iter().enumerate() {
            for i in 0..m {
                let z = res.primal[n + w * m + i];
                let s = res.primal[n + m * scen.len() + w * m + i];
                if z > 0.5 {
                    assert!((s - (d[i] - cov[i]).max(0.0)).abs() < 1e-6);
                }
            }
        }
    }
}

#[test]
fn saa_with_realized_scenario_matches_deterministic() {
    let inst = generate_instance(&mut rng(9), 20, 100, 0.08).unwrap();
    let mut r = rng(10);
    for _ in 0..5 {
        let d = SmcDraw::sample(&inst, &mut r).demand;
        let det = posterior_optimal(&inst, &d).unwrap();
        let x = solve_saa(&inst, &[d.clone()], SaaForm::Compact).unwrap();
        assert_eq!(recourse_cost(&inst, &x, &d), det);
        let x3 = solve_saa(&inst, &[d.clone(), d.clone(), d.clone()], SaaForm::Compact).unwrap();
        assert_eq!(recourse_cost(&inst, &x3, &d), det);
    }
    // the indicator form on a small instance
    let small = tiny_instance(&mut r, 2, 3);
    let d = vec![2.0, 3.0];
    let x = solve_saa(&small, &[d.clone()], SaaForm::Indicator).unwrap();
    assert_eq!(recourse_cost(&small, &x, &d), posterior_optimal(&small, &d).unwrap());
}

#[test]
fn rate_fitting() {
    let exact = Dataset {
        rows: (1..=5).map(|o| (o as f64, vec![2.0 * o as f64, 3.0 * o as f64])).collect(),
    };
    let a = fit_rate_model(&exact).unwrap();
    assert!((a[0] - 2.0).abs() < 1e-12 && (a[1] - 3.0).abs() < 1e-12);
    let single = Dataset { rows: vec![(4.0, vec![10.0])] };
    assert_eq!(fit_rate_model(&single).unwrap(), vec![2.5]);
    assert!(matches!(fit_rate_model(&Dataset::default()), Err(SmcError::DegenerateData(_))));
    let zeros = Dataset { rows: vec![(0.0, vec![1.0]), (0.0, vec![2.0])] };
    assert!(matches!(fit_rate_model(&zeros), Err(SmcError::DegenerateData(_))));

    let inst = generate_instance(&mut rng(11), 20, 100, 0.08).unwrap();
    let mut r = rng(12);
    let mean_mape = |m: usize, r: &mut ChaCha8Rng| {
        let reps = 10;
        (0..reps)
            .map(|_| {
                let est = fit_rate_model(&generate_dataset(&inst, m, r)).unwrap();
                rate_mape(&est, &inst.rate_slopes).iter().sum::<f64>() / 20.0
            })
            .sum::<f64>()
            / reps as f64
    };
    let small = mean_mape(50, &mut r);
    let large = mean_mape(500, &mut r);
    assert!(large < small);
    assert!(large < 5.0, "MAPE {large}%");
}

#[test]
fn point_prediction_with_exact_rates_is_posterior_optimal() {
    let inst = generate_instance(&mut rng(13), 20, 100, 0.08).unwrap();
    for o in [1.5, 4.0, 9.3] {
        let d: Vec<f64> = inst.rate_slopes.iter().map(|a| round_half_up(a * o)).collect();
        let x = predict_then_optimize(&inst, o, &inst.rate_slopes, PtoMode::Point, &mut rng(0)).unwrap();
        assert_eq!(recourse_cost(&inst, &x, &d), posterior_optimal(&inst, &d).unwrap());
    }
}

#[test]
fn more_scenarios_do_not_hurt_on_average() {
    let inst = generate_instance(&mut rng(14), 20, 100, 0.08).unwrap();
    let mut r = rng(15);
    let draws: Vec<SmcDraw> = (0..30).map(|_| SmcDraw::sample(&inst, &mut r)).collect();
    let mut means = Vec::new();
    for s in [1, 10, 50] {
        let mut total = 0.0;
        for (k, draw) in draws.iter().enumerate() {
            let x = predict_then_optimize(&inst, draw.o, &inst.rate_slopes, PtoMode::Saa(s), &mut rng(100 + k as u64)).unwrap();
            total += recourse_cost(&inst, &x, &draw.demand);
        }
        means.push(total / draws.len() as f64);
    }
    assert!(means[1] <= means[0] && means[2] <= means[1], "{means:?}");
}

#[test]
fn environment_examples() {
    assert_eq!(action_scale(), 79.0);
    let inst = generate_instance(&mut rng(16), 20, 100, 0.08).unwrap();
    let layer = SmcLayer::new(inst.clone());
    let mut env = make_smc_env(inst.clone());
    let draw = SmcDraw::sample(&inst, &mut rng(17));
    let posterior = posterior_optimal(&inst, &draw.demand).unwrap();

    let exact: Vec<f64> = draw.demand.iter().map(|d| d / layer.scale).collect();
    assert_eq!(decode_demands(&exact, layer.scale), draw.demand);
    let mut pi = DecomposedPolicy::new(move |_: &Observation| VirtualParams(exact.clone()), &layer);
    let t = rollout(&mut pi, &mut env, &draw, 0).unwrap();
    assert_eq!(t.total, posterior);

    let mut zero = DecomposedPolicy::new(|_: &Observation| VirtualParams(vec![0.0; 20]), &layer);
    let t = rollout(&mut zero, &mut env, &draw, 0).unwrap();
    let pure_penalty: f64 = inst.penalties.iter().zip(&draw.demand).map(|(w, d)| w * d).sum();
    assert_eq!(t.steps[0].decision.values, vec![0.0; 100]);
    assert_eq!(t.total, pure_penalty);

    let over: Vec<f64> = draw.demand.iter().map(|d| (d + 1.0) / layer.scale).collect();
    let mut pi = DecomposedPolicy::new(move |_: &Observation| VirtualParams(over.clone()), &layer);
    let t = rollout(&mut pi, &mut env, &draw, 0).unwrap();
    assert!(t.total >= posterior);

    assert!(env.step(&Decision::feasible(vec![0.0; 100])).is_err());
    let obs = env.reset(&draw, 0).unwrap();
    assert!(obs.normalized().is_normalized());
}

#[test]
fn files_round_trip() {
    let inst = generate_instance(&mut rng(18), 20, 100, 0.08).unwrap();
    let dir = std::env::temp_dir().join(format!("unify-smc-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("instance.toml");
    io::save_instance(&inst, &p).unwrap();
    assert_eq!(io::load_instance(&p).unwrap(), inst);
    let data = generate_dataset(&inst, 25, &mut rng(19));
    let q = dir.join("data.csv");
    io::save_dataset(&data, &q).unwrap();
    assert_eq!(io::load_dataset(&q).unwrap(), data);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn pipelines_are_reproducible() {
    let run = |seed: u64| {
        let mut r = rng(seed);
        let inst = generate_instance(&mut r, 20, 100, 0.08).unwrap();
        let draw = SmcDraw::sample(&inst, &mut r);
        let x = predict_then_optimize(&inst, draw.o, &inst.rate_slopes, PtoMode::Saa(10), &mut r).unwrap();
        (inst, draw, x)
    };
    assert_eq!(run(21), run(21));
    assert_ne!(run(21).0, run(22).0);
}
