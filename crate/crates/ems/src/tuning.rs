use rand::Rng;
use unify_opt::{solve_lp, solve_mip_with, Lp, LpError, Mip, MipOptions, Sense, Status};

use crate::error::EmsError;
use crate::instance::{sample_realization, EmsInstance, EmsRealization};
use crate::online::{build_online_lp, simulate_day, LP_BUY, LP_SELL, LP_X0, LP_X3};

// Per (scenario, stage) block layout.
const X0: usize = 0;
const XB: usize = 1;
const XS: usize = 2;
const X3: usize = 3;
const LAMBDA: usize = 4;
/// Multipliers of `x0 ≥ −P`, `x0 ≥ −γ/η`, `x0 ≤ P`, `x0 ≤ (Γ−γ)/η`,
/// `xb ≥ 0`, `xs ≥ 0`, `x3 ≥ 0`, `x3 ≤ D`.
const MU: usize = 5;
const N_MU: usize = 8;
const DELTA: usize = MU + N_MU;
const GAMMA: usize = DELTA + N_MU;
const BLOCK: usize = GAMMA + 1;

const A0: usize = 0;
const AW: usize = 1;
const B0: usize = 2;
const BW: usize = 3;
const AB: usize = 4;
const AS: usize = 5;
const A3: usize = 6;
const B3: usize = 7;

/// Options of the offline tuning model.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningOptions {
    /// Every active multiplier is at least this large, which makes the
    /// online LP optimum unique at the returned schedule.
    pub strictness: f64,
    pub node_limit: usize,
    pub gap_tol: f64,
}

impl Default for TuningOptions {
    fn default() -> Self {
        TuningOptions {
            strictness: 1e-4,
            node_limit: 20_000,
            gap_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningResult {
    pub schedule: Vec<f64>,
    /// Average true cost over the scenarios according to the model.
    pub objective: f64,
    /// Lower bound on the model optimum.
    pub bound: f64,
    pub proven_optimal: bool,
    /// `[x0, x1, x2, x3]` per stage for every scenario.
    pub flows: Vec<Vec<[f64; 4]>>,
    pub nodes_exhausted: bool,
}

struct Layout {
    n: usize,
}

impl Layout {
    fn c0(&self, k: usize) -> usize {
        k
    }
    fn block(&self, w: usize, k: usize) -> usize {
        self.n + (w * self.n + k) * BLOCK
    }
    fn num_vars(&self, scenarios: usize) -> usize {
        self.n + scenarios * self.n * BLOCK
    }
}

fn c0_bound(instance: &EmsInstance) -> f64 {
    2.0 * instance.max_buy_price()
}

fn buy_cap(instance: &EmsInstance, res: f64, load: f64) -> f64 {
    (load - res).max(0.0) + instance.storage_power + 1.0
}

/// Big-M bounds of the eight multipliers at stage `k`.
fn multiplier_caps(instance: &EmsInstance, k: usize, eps: f64) -> [f64; N_MU] {
    let (pb, ps, cd) = (instance.buy_price[k], instance.sell_price[k], instance.diesel_cost);
    let x0 = c0_bound(instance) + pb;
    [x0, x0, x0, x0, pb - ps, pb - ps, (cd - ps).max(0.0), (pb - cd).max(0.0)].map(|m| m.max(eps))
}

/// Builds the offline model: the online heuristic's KKT system for every
/// scenario and stage, coupled by the shared virtual costs and the battery
/// transitions, minimizing the average true cost.
///
/// Complementarity `μ·slack = 0` is linearized with a binary `δ` per pair:
/// `ε·δ ≤ μ ≤ B·δ` and `slack ≤ M·(1 − δ)`. Each flow has at most one active
/// bound and at least three of the four flows are held by one, so the online
/// LP has a unique optimum that equals the model's flows.
pub fn build_tuning_mip(instance: &EmsInstance, scenarios: &[EmsRealization], opts: &TuningOptions) -> Mip {
    let n = instance.n();
    let lay = Layout { n };
    let nv = lay.num_vars(scenarios.len());
    let mut lp = Lp::new(nv);
    let eps = opts.strictness;
    let (p, cap_g, eta) = (instance.storage_power, instance.capacity, instance.efficiency);
    let cap_s = instance.sell_cap();
    let d_max = instance.diesel_max;
    let weight = 1.0 / scenarios.len() as f64;
    let cb = c0_bound(instance);
    let mut integrality = vec![false; nv];
    for k in 0..n {
        lp.set_bounds(lay.c0(k), -cb, cb);
    }
    for (w, real) in scenarios.iter().enumerate() {
        for k in 0..n {
            let b = lay.block(w, k);
            let v = |i: usize| b + i;
            let (res, load) = (real.res[k], real.load[k]);
            let (pb, ps, cd) = (instance.buy_price[k], instance.sell_price[k], instance.diesel_cost);
            lp.set_objective_coeff(v(XB), weight * pb);
            lp.set_objective_coeff(v(XS), -weight * ps);
            lp.set_objective_coeff(v(X3), weight * cd);
            lp.set_bounds(v(X0), -p, p);
            lp.set_bounds(v(XB), 0.0, buy_cap(instance, res, load));
            lp.set_bounds(v(XS), 0.0, cap_s);
            lp.set_bounds(v(X3), 0.0, d_max);
            lp.set_bounds(v(LAMBDA), ps, pb);
            let caps = multiplier_caps(instance, k, eps);
            for (i, &m) in caps.iter().enumerate() {
                lp.set_bounds(v(MU + i), 0.0, m);
                lp.set_bounds(v(DELTA + i), 0.0, 1.0);
                integrality[v(DELTA + i)] = true;
            }
            if k == 0 {
                lp.set_bounds(v(GAMMA), instance.initial_charge, instance.initial_charge);
            } else {
                lp.set_bounds(v(GAMMA), 0.0, cap_g);
                let prev = lay.block(w, k - 1);
                lp.add_sparse(&[(v(GAMMA), 1.0), (prev + GAMMA, -1.0), (prev + X0, -eta)], Sense::Eq, 0.0);
            }

            // Primal feasibility.
            lp.add_sparse(&[(v(X0), -1.0), (v(XB), 1.0), (v(XS), -1.0), (v(X3), 1.0)], Sense::Eq, load - res);
            lp.add_sparse(&[(v(X0), 1.0), (v(GAMMA), 1.0 / eta)], Sense::Ge, 0.0);
            lp.add_sparse(&[(v(X0), 1.0), (v(GAMMA), 1.0 / eta)], Sense::Le, cap_g / eta);

            // Stationarity of x0, xb, xs, x3.
            lp.add_sparse(
                &[
                    (lay.c0(k), 1.0),
                    (v(LAMBDA), 1.0),
                    (v(MU + A0), -1.0),
                    (v(MU + AW), -1.0),
                    (v(MU + B0), 1.0),
                    (v(MU + BW), 1.0),
                ],
                Sense::Eq,
                0.0,
            );
            lp.add_sparse(&[(v(LAMBDA), 1.0), (v(MU + AB), 1.0)], Sense::Eq, pb);
            lp.add_sparse(&[(v(LAMBDA), 1.0), (v(MU + AS), -1.0)], Sense::Eq, ps);
            lp.add_sparse(&[(v(LAMBDA), 1.0), (v(MU + A3), 1.0), (v(MU + B3), -1.0)], Sense::Eq, cd);

            // Complementarity: multiplier switches, then slack ≤ M(1 − δ)
            // written as `slack + M·δ ≤ M`.
            for i in 0..N_MU {
                lp.add_sparse(&[(v(MU + i), 1.0), (v(DELTA + i), -caps[i])], Sense::Le, 0.0);
                lp.add_sparse(&[(v(MU + i), 1.0), (v(DELTA + i), -eps)], Sense::Ge, 0.0);
            }
            let wmax = p + cap_g / eta;
            // x0 + P ≤ 2P(1 − δ)
            lp.add_sparse(&[(v(X0), 1.0), (v(DELTA + A0), 2.0 * p)], Sense::Le, p);
            // x0 + γ/η ≤ M(1 − δ)
            lp.add_sparse(&[(v(X0), 1.0), (v(GAMMA), 1.0 / eta), (v(DELTA + AW), wmax)], Sense::Le, wmax);
            // P − x0 ≤ 2P(1 − δ)
            lp.add_sparse(&[(v(X0), -1.0), (v(DELTA + B0), 2.0 * p)], Sense::Le, p);
            // (Γ − γ)/η − x0 ≤ M(1 − δ)
            lp.add_sparse(
                &[(v(X0), -1.0), (v(GAMMA), -1.0 / eta), (v(DELTA + BW), wmax)],
                Sense::Le,
                wmax - cap_g / eta,
            );
            let xb_cap = buy_cap(instance, res, load);
            lp.add_sparse(&[(v(XB), 1.0), (v(DELTA + AB), xb_cap)], Sense::Le, xb_cap);
            lp.add_sparse(&[(v(XS), 1.0), (v(DELTA + AS), cap_s)], Sense::Le, cap_s);
            lp.add_sparse(&[(v(X3), 1.0), (v(DELTA + A3), d_max)], Sense::Le, d_max);
            lp.add_sparse(&[(v(X3), -1.0), (v(DELTA + B3), d_max)], Sense::Le, 0.0);

            // One active bound per flow, and at most one flow without one.
            let d = |i: usize| (v(DELTA + i), 1.0);
            lp.add_sparse(&[d(A0), d(AW), d(B0), d(BW)], Sense::Le, 1.0);
            lp.add_sparse(&[d(A3), d(B3)], Sense::Le, 1.0);
            let all: Vec<(usize, f64)> = (0..N_MU).map(d).collect();
            lp.add_sparse(&all, Sense::Ge, 3.0);
        }
    }
    Mip::new(lp, integrality)
}

/// A strictly complementary KKT point of the stage LP at `(flows, c0)`, as
/// `[λ, μ…, δ…]`, or `None` when the multipliers cannot be made strict.
fn strict_multipliers(
    instance: &EmsInstance,
    k: usize,
    gamma: f64,
    c0: f64,
    x: [f64; 4],
    eps: f64,
) -> Option<(f64, [f64; N_MU], [f64; N_MU])> {
    let (pb, ps, cd) = (instance.buy_price[k], instance.sell_price[k], instance.diesel_cost);
    let p = instance.storage_power;
    let eta = instance.efficiency;
    let tol = 1e-7;
    let [x0, xb, xs, x3] = x;
    let at = |a: f64, b: f64| (a - b).abs() <= tol;
    // Which bound holds each flow: Some(index) or None for a free flow.
    let x0_bound = if at(x0, -p) {
        Some(A0)
    } else if at(x0, -gamma / eta) {
        Some(AW)
    } else if at(x0, p) {
        Some(B0)
    } else if at(x0, (instance.capacity - gamma) / eta) {
        Some(BW)
    } else {
        None
    };
    let xb_bound = at(xb, 0.0).then_some(AB);
    let xs_bound = at(xs, 0.0).then_some(AS);
    let x3_bound = if at(x3, 0.0) {
        Some(A3)
    } else if at(x3, instance.diesel_max) {
        Some(B3)
    } else {
        None
    };
    // λ interval implied by strict signs and the free flow's equality.
    let (mut lo, mut hi) = (ps, pb);
    let mut fix = |l: f64, h: f64| {
        lo = lo.max(l);
        hi = hi.min(h);
    };
    match x0_bound {
        Some(A0) | Some(AW) => fix(eps - c0, f64::INFINITY),
        Some(_) => fix(f64::NEG_INFINITY, -c0 - eps),
        None => fix(-c0, -c0),
    }
    match xb_bound {
        Some(_) => fix(f64::NEG_INFINITY, pb - eps),
        None => fix(pb, pb),
    }
    match xs_bound {
        Some(_) => fix(ps + eps, f64::INFINITY),
        None => fix(ps, ps),
    }
    match x3_bound {
        Some(A3) => fix(f64::NEG_INFINITY, cd - eps),
        Some(_) => fix(cd + eps, f64::INFINITY),
        None => fix(cd, cd),
    }
    let free = [x0_bound, xb_bound, xs_bound, x3_bound].iter().filter(|b| b.is_none()).count();
    if lo > hi + 1e-12 || free > 1 {
        return None;
    }
    let lambda = 0.5 * (lo + hi);
    let mut mu = [0.0; N_MU];
    let mut delta = [0.0; N_MU];
    if let Some(i) = x0_bound {
        mu[i] = (c0 + lambda).abs();
        delta[i] = 1.0;
    }
    if xb_bound.is_some() {
        mu[AB] = pb - lambda;
        delta[AB] = 1.0;
    }
    if xs_bound.is_some() {
        mu[AS] = lambda - ps;
        delta[AS] = 1.0;
    }
    match x3_bound {
        Some(A3) => {
            mu[A3] = cd - lambda;
            delta[A3] = 1.0;
        }
        Some(_) => {
            mu[B3] = lambda - cd;
            delta[B3] = 1.0;
        }
        None => {}
    }
    Some((lambda, mu, delta))
}

/// Model point for a given schedule, built by simulating every scenario.
/// Used to seed branch-and-bound; `None` if some stage is degenerate.
pub fn schedule_point(
    instance: &EmsInstance,
    scenarios: &[EmsRealization],
    schedule: &[f64],
    opts: &TuningOptions,
) -> Option<Vec<f64>> {
    let n = instance.n();
    let lay = Layout { n };
    let mut point = vec![0.0; lay.num_vars(scenarios.len())];
    point[..n].copy_from_slice(schedule);
    for (w, real) in scenarios.iter().enumerate() {
        let mut gamma = instance.initial_charge;
        for k in 0..n {
            let lp = build_online_lp(instance, k, gamma, schedule[k], real.res[k], real.load[k]);
            let r = solve_lp(&lp).ok()?;
            if r.status != Status::Optimal {
                return None;
            }
            let x = [r.primal[LP_X0], r.primal[LP_BUY], r.primal[LP_SELL], r.primal[LP_X3]];
            let (lambda, mu, delta) = strict_multipliers(instance, k, gamma, schedule[k], x, opts.strictness)?;
            let b = lay.block(w, k);
            point[b + X0] = x[0];
            point[b + XB] = x[1];
            point[b + XS] = x[2];
            point[b + X3] = x[3];
            point[b + LAMBDA] = lambda;
            point[b + MU..b + MU + N_MU].copy_from_slice(&mu);
            point[b + DELTA..b + DELTA + N_MU].copy_from_slice(&delta);
            point[b + GAMMA] = gamma;
            gamma += instance.efficiency * x[0];
        }
    }
    Some(point)
}

/// Solves the offline model for the given scenarios.
pub fn tune_schedule(instance: &EmsInstance, scenarios: &[EmsRealization], opts: &TuningOptions) -> Result<TuningResult, EmsError> {
    if scenarios.is_empty() {
        return Err(EmsError::Tuning("no scenarios".into()));
    }
    instance.check()?;
    let n = instance.n();
    let mip = build_tuning_mip(instance, scenarios, opts);
    let mip_opts = MipOptions {
        gap_tol: opts.gap_tol,
        node_limit: opts.node_limit,
        incumbent: schedule_point(instance, scenarios, &vec![0.0; n], opts),
        integral_objective: false,
    };
    let (res, bound, exhausted) = match solve_mip_with(&mip, &mip_opts) {
        Ok(r) => {
            let obj = r.objective;
            (r, obj, false)
        }
        Err(LpError::NodeLimitExceeded {
            incumbent: Some(inc),
            bound,
            ..
        }) => (*inc, bound, true),
        Err(e) => return Err(EmsError::Tuning(e.to_string())),
    };
    if res.status != Status::Optimal {
        return Err(EmsError::Tuning(format!("model status {:?}", res.status)));
    }
    let lay = Layout { n };
    let x = &res.primal;
    let schedule: Vec<f64> = (0..n).map(|k| x[lay.c0(k)]).collect();
    let flows = (0..scenarios.len())
        .map(|w| {
            (0..n)
                .map(|k| {
                    let b = lay.block(w, k);
                    [x[b + X0], scenarios[w].res[k], x[b + XB] - x[b + XS], x[b + X3]]
                })
                .collect()
        })
        .collect();
    Ok(TuningResult {
        schedule,
        objective: res.objective,
        bound,
        proven_optimal: !exhausted,
        flows,
        nodes_exhausted: exhausted,
    })
}

/// Samples `scenario_count` realizations and tunes the virtual costs on them.
pub fn tuning_baseline<R: Rng + ?Sized>(
    instance: &EmsInstance,
    scenario_count: usize,
    rng: &mut R,
    opts: &TuningOptions,
) -> Result<(TuningResult, Vec<EmsRealization>), EmsError> {
    if scenario_count == 0 {
        return Err(EmsError::Tuning("scenario count must be at least 1".into()));
    }
    let scenarios: Vec<EmsRealization> = (0..scenario_count).map(|_| sample_realization(instance, rng)).collect();
    Ok((tune_schedule(instance, &scenarios, opts)?, scenarios))
}

/// Average true cost of `schedule` over the scenarios.
pub fn average_cost(instance: &EmsInstance, scenarios: &[EmsRealization], schedule: &[f64]) -> Result<f64, EmsError> {
    let mut total = 0.0;
    for s in scenarios {
        total += simulate_day(instance, s, schedule)?.cost;
    }
    Ok(total / scenarios.len() as f64)
}
