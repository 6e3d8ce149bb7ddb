use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unify_opt::{kkt_residuals, solve_lp, solve_mip, Lp, Mip, Row, Sense, Status};
use unify_oracles::{lp_vertex_enumeration, mip_enumeration};

fn random_sense(rng: &mut ChaCha8Rng) -> Sense {
    match rng.random_range(0..3) {
        0 => Sense::Le,
        1 => Sense::Ge,
        _ => Sense::Eq,
    }
}

fn random_lp(rng: &mut ChaCha8Rng) -> Lp {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(0..=4);
    let obj: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut lp = Lp::new(n).with_objective(obj);
    for j in 0..n {
        let l = rng.random_range(-5.0..0.0);
        let u = l + rng.random_range(0.5..8.0);
        lp.set_bounds(j, l, u);
    }
    for _ in 0..m {
        let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
        let sense = random_sense(rng);
        lp.add_constraint(coeffs, sense, rng.random_range(-4.0..4.0));
    }
    lp
}

fn random_mip(rng: &mut ChaCha8Rng) -> Mip {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(1..=3);
    let obj: Vec<f64> = (0..n).map(|_| rng.random_range(-5..=5) as f64).collect();
    let mut lp = Lp::new(n).with_objective(obj);
    for j in 0..n {
        lp.set_bounds(j, 0.0, rng.random_range(1..=5) as f64);
    }
    for _ in 0..m {
        let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let sense = if rng.random_bool(0.5) { Sense::Le } else { Sense::Ge };
        lp.add_constraint(coeffs, sense, rng.random_range(-3.0..6.0));
    }
    Mip::new(lp, vec![true; n])
}

#[test]
fn lp_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut feasible = 0;
    for case in 0..200 {
        let lp = random_lp(&mut rng);
        let res = solve_lp(&lp).unwrap();
        match lp_vertex_enumeration(&lp) {
            None => assert_eq!(res.status, Status::Infeasible, "case {case}\n{lp}"),
            Some((obj, _)) => {
                feasible += 1;
                assert_eq!(res.status, Status::Optimal, "case {case}\n{lp}");
                assert!((res.objective - obj).abs() <= 1e-6, "case {case}: {} vs {obj}\n{lp}", res.objective);
                assert!(lp.max_violation(&res.primal) <= 1e-7);
                assert!(kkt_residuals(&lp, &res).unwrap().max() <= 1e-6);
            }
        }
    }
    assert!(feasible > 50);
}

#[test]
fn mip_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..100 {
        let mip = random_mip(&mut rng);
        let res = solve_mip(&mip, 0.0).unwrap();
        match mip_enumeration(&mip) {
            None => assert_eq!(res.status, Status::Infeasible, "case {case}"),
            Some((obj, _)) => {
                assert_eq!(res.status, Status::Optimal);
                assert!((res.objective - obj).abs() <= 1e-9, "case {case}: {} vs {obj}", res.objective);
            }
        }
    }
}

#[test]
fn indicator_models_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..60 {
        let mut mip = random_mip(&mut rng);
        let n = mip.base.num_vars();
        if n < 2 {
            continue;
        }
        let b = n - 1;
        let coeffs: Vec<f64> = (0..n).map(|j| if j == b { 0.0 } else { rng.random_range(-2.0..2.0) }).collect();
        mip.add_indicator(b, rng.random_bool(0.5), Row::new(coeffs, Sense::Le, rng.random_range(-1.0..2.0)));
        let res = solve_mip(&mip, 0.0).unwrap();
        match mip_enumeration(&mip) {
            None => assert_eq!(res.status, Status::Infeasible, "case {case}"),
            Some((obj, _)) => {
                assert!((res.objective - obj).abs() <= 1e-9, "case {case}");
                assert!(mip.is_feasible(&res.primal, 1e-6));
            }
        }
    }
}

#[test]
fn identical_models_give_identical_results() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let lp = random_lp(&mut rng);
        assert_eq!(solve_lp(&lp).unwrap(), solve_lp(&lp.clone()).unwrap());
        let mip = random_mip(&mut rng);
        assert_eq!(solve_mip(&mip, 0.0).unwrap(), solve_mip(&mip.clone(), 0.0).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strong_duality_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lp = random_lp(&mut rng);
        let res = solve_lp(&lp).unwrap();
        if res.status == Status::Optimal {
            let r = kkt_residuals(&lp, &res).unwrap();
            prop_assert!(r.duality_gap.abs() <= 1e-6 * (1.0 + res.objective.abs()));
            prop_assert!(r.complementarity <= 1e-6);
            prop_assert!(r.stationarity <= 1e-6);
        }
    }
}
