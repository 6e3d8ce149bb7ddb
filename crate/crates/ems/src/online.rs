use unify_opt::{solve_lp, Lp, LpResult, Sense, Status};

use crate::error::EmsError;
use crate::instance::{EmsInstance, EmsRealization, DIESEL, GRID, NUM_FLOWS, RES, STORAGE};

/// Variable layout of the stage LP: storage, RES, grid purchase, grid sale,
/// diesel.
pub const LP_X0: usize = 0;
pub const LP_X1: usize = 1;
pub const LP_BUY: usize = 2;
pub const LP_SELL: usize = 3;
pub const LP_X3: usize = 4;
pub const LP_VARS: usize = 5;

/// Tolerance on the power balance of a dispatch.
pub const BALANCE_TOL: f64 = 1e-6;

/// Flows of one stage and the battery charge around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageDispatch {
    /// `[x0, x1, x2, x3]`; `x0 > 0` charges the battery, `x2 > 0` buys.
    pub flows: [f64; NUM_FLOWS],
    pub gamma: f64,
    pub gamma_next: f64,
}

impl StageDispatch {
    /// Power delivered to the load, `−x0 + x1 + x2 + x3`.
    pub fn delivered(&self) -> f64 {
        delivered(&self.flows)
    }
}

pub fn delivered(flows: &[f64]) -> f64 {
    -flows[STORAGE] + flows[RES] + flows[GRID] + flows[DIESEL]
}

/// How the online heuristic looks ahead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnlineMode {
    /// One LP per stage that ignores the future.
    #[default]
    PerStage,
    /// At each stage, one LP over the remaining horizon with the forecasts for
    /// future stages and the schedule's virtual costs; only the current stage
    /// is applied.
    HorizonSummed,
}

/// The myopic dispatch LP for stage `k`:
///
/// ```text
/// min  c0·x0 + buy·xb − sell·xs + diesel·x3
/// s.t. −x0 + x1 + xb − xs + x3 = L̃
///      x1 = R̃,  lo(γ) ≤ x0 ≤ hi(γ),  0 ≤ xs ≤ cap,  0 ≤ x3 ≤ D,  xb ≥ 0
/// ```
pub fn build_online_lp(instance: &EmsInstance, k: usize, gamma: f64, c0: f64, res: f64, load: f64) -> Lp {
    let mut lp = Lp::new(LP_VARS).with_objective(vec![
        c0,
        0.0,
        instance.buy_price[k],
        -instance.sell_price[k],
        instance.diesel_cost,
    ]);
    let (lo, hi) = instance.storage_bounds(gamma);
    lp.set_bounds(LP_X0, lo, hi);
    lp.set_bounds(LP_X1, res, res);
    lp.set_bounds(LP_BUY, 0.0, f64::INFINITY);
    lp.set_bounds(LP_SELL, 0.0, instance.sell_cap());
    lp.set_bounds(LP_X3, 0.0, instance.diesel_max);
    lp.add_constraint(vec![-1.0, 1.0, 1.0, -1.0, 1.0], Sense::Eq, load);
    lp
}

fn optimal(res: Result<LpResult, unify_opt::LpError>, stage: usize) -> Result<LpResult, EmsError> {
    let r = res.map_err(|source| EmsError::Solver { stage, source })?;
    if r.status != Status::Optimal {
        return Err(EmsError::NotOptimal {
            stage,
            status: format!("{:?}", r.status),
        });
    }
    Ok(r)
}

/// Turns a storage flow into a dispatch, snapping the flow onto its interval
/// so that the battery update stays inside `[0, Γ]`.
fn dispatch(instance: &EmsInstance, gamma: f64, x0: f64, x1: f64, x2: f64, x3: f64) -> StageDispatch {
    let (lo, hi) = instance.storage_bounds(gamma);
    let x0 = x0.clamp(lo, hi);
    StageDispatch {
        flows: [x0, x1, x2, x3],
        gamma,
        gamma_next: gamma + instance.efficiency * x0,
    }
}

/// Solves the stage LP and returns the dispatch together with the raw result.
pub fn solve_stage_lp(
    instance: &EmsInstance,
    k: usize,
    gamma: f64,
    c0: f64,
    res: f64,
    load: f64,
) -> Result<(StageDispatch, Lp, LpResult), EmsError> {
    let lp = build_online_lp(instance, k, gamma, c0, res, load);
    let r = optimal(solve_lp(&lp), k)?;
    let x = &r.primal;
    let d = dispatch(instance, gamma, x[LP_X0], res, x[LP_BUY] - x[LP_SELL], x[LP_X3].clamp(0.0, instance.diesel_max));
    Ok((d, lp, r))
}

pub fn solve_stage(instance: &EmsInstance, k: usize, gamma: f64, c0: f64, res: f64, load: f64) -> Result<StageDispatch, EmsError> {
    solve_stage_lp(instance, k, gamma, c0, res, load).map(|(d, _, _)| d)
}

/// Joint LP over stages `start..n`. Per stage the layout is the stage-LP
/// layout; the battery charge is tracked through cumulative rows
/// `0 ≤ γ + η Σ x0 ≤ Γ`. With `curtail` the RES flow ranges over `[0, R]`
/// instead of being fixed.
pub fn build_horizon_lp(
    instance: &EmsInstance,
    start: usize,
    gamma: f64,
    c0: &[f64],
    res: &[f64],
    load: &[f64],
    curtail: bool,
) -> Lp {
    let n = instance.n();
    let stages = n - start;
    let nv = stages * LP_VARS;
    let mut lp = Lp::new(nv);
    for s in 0..stages {
        let k = start + s;
        let v = s * LP_VARS;
        lp.set_objective_coeff(v + LP_X0, c0[k]);
        lp.set_objective_coeff(v + LP_BUY, instance.buy_price[k]);
        lp.set_objective_coeff(v + LP_SELL, -instance.sell_price[k]);
        lp.set_objective_coeff(v + LP_X3, instance.diesel_cost);
        lp.set_bounds(v + LP_X0, -instance.storage_power, instance.storage_power);
        lp.set_bounds(v + LP_X1, if curtail { 0.0 } else { res[k] }, res[k]);
        lp.set_bounds(v + LP_SELL, 0.0, instance.sell_cap());
        lp.set_bounds(v + LP_X3, 0.0, instance.diesel_max);
        lp.add_sparse(
            &[(v + LP_X0, -1.0), (v + LP_X1, 1.0), (v + LP_BUY, 1.0), (v + LP_SELL, -1.0), (v + LP_X3, 1.0)],
            Sense::Eq,
            load[k],
        );
        let cumulative: Vec<(usize, f64)> = (0..=s).map(|t| (t * LP_VARS + LP_X0, instance.efficiency)).collect();
        lp.add_sparse(&cumulative, Sense::Ge, -gamma);
        lp.add_sparse(&cumulative, Sense::Le, instance.capacity - gamma);
    }
    lp
}

/// A full simulated day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayOutcome {
    pub dispatch: Vec<StageDispatch>,
    /// Real cost: grid purchases minus sales plus diesel, no virtual term.
    pub cost: f64,
}

impl DayOutcome {
    pub fn final_charge(&self) -> f64 {
        self.dispatch.last().map_or(0.0, |d| d.gamma_next)
    }

    pub fn flows(&self) -> Vec<f64> {
        self.dispatch.iter().flat_map(|d| d.flows).collect()
    }
}

pub fn true_cost(instance: &EmsInstance, dispatch: &[StageDispatch]) -> f64 {
    dispatch.iter().enumerate().map(|(k, d)| instance.stage_cost(k, &d.flows)).sum()
}

fn check_lengths(instance: &EmsInstance, realization: &EmsRealization, schedule: &[f64]) -> Result<(), EmsError> {
    let n = instance.n();
    if schedule.len() != n {
        return Err(EmsError::ScheduleLength {
            expected: n,
            got: schedule.len(),
        });
    }
    if realization.res.len() != n || realization.load.len() != n {
        return Err(EmsError::InvalidInstance(format!("realization has {} stages, instance {n}", realization.n())));
    }
    Ok(())
}

/// Runs the online heuristic through the day with the virtual storage costs
/// `schedule`, threading the battery charge.
pub fn simulate_day(instance: &EmsInstance, realization: &EmsRealization, schedule: &[f64]) -> Result<DayOutcome, EmsError> {
    simulate_day_with(instance, realization, schedule, OnlineMode::PerStage)
}

pub fn simulate_day_with(
    instance: &EmsInstance,
    realization: &EmsRealization,
    schedule: &[f64],
    mode: OnlineMode,
) -> Result<DayOutcome, EmsError> {
    check_lengths(instance, realization, schedule)?;
    let n = instance.n();
    let mut gamma = instance.initial_charge;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (res, load) = (realization.res[k], realization.load[k]);
        let d = match mode {
            OnlineMode::PerStage => solve_stage(instance, k, gamma, schedule[k], res, load)?,
            OnlineMode::HorizonSummed => {
                let mut r = instance.res_forecast.clone();
                let mut l = instance.load_forecast.clone();
                r[k] = res;
                l[k] = load;
                let lp = build_horizon_lp(instance, k, gamma, schedule, &r, &l, false);
                let x = optimal(solve_lp(&lp), k)?.primal;
                dispatch(
                    instance,
                    gamma,
                    x[LP_X0],
                    res,
                    x[LP_BUY] - x[LP_SELL],
                    x[LP_X3].clamp(0.0, instance.diesel_max),
                )
            }
        };
        gamma = d.gamma_next;
        out.push(d);
    }
    let cost = true_cost(instance, &out);
    Ok(DayOutcome { dispatch: out, cost })
}

/// Perfect-information optimum: one LP over the whole day with the realized
/// values, no virtual costs and optional RES curtailment.
pub fn clairvoyant_cost(instance: &EmsInstance, realization: &EmsRealization) -> Result<f64, EmsError> {
    check_lengths(instance, realization, &vec![0.0; instance.n()])?;
    let zeros = vec![0.0; instance.n()];
    let lp = build_horizon_lp(
        instance,
        0,
        instance.initial_charge,
        &zeros,
        &realization.res,
        &realization.load,
        true,
    );
    Ok(optimal(solve_lp(&lp), 0)?.objective)
}

/// Checks every dispatch invariant: balance, bounds, battery window and the
/// exact battery transition.
pub fn check_dispatch(instance: &EmsInstance, realization: &EmsRealization, dispatch: &[StageDispatch]) -> Result<(), String> {
    let mut gamma = instance.initial_charge;
    for (k, d) in dispatch.iter().enumerate() {
        if d.gamma != gamma {
            return Err(format!("stage {k}: charge {} does not continue {}", d.gamma, gamma));
        }
        if (d.delivered() - realization.load[k]).abs() > BALANCE_TOL {
            return Err(format!("stage {k}: balance off by {}", d.delivered() - realization.load[k]));
        }
        let [x0, x1, x2, x3] = d.flows;
        let (lo, hi) = instance.storage_bounds(gamma);
        let tol = 1e-9;
        if x0 < lo - tol || x0 > hi + tol {
            return Err(format!("stage {k}: storage flow {x0} outside [{lo}, {hi}]"));
        }
        if x1 < -tol || x1 > realization.res[k] + tol {
            return Err(format!("stage {k}: RES flow {x1} outside [0, {}]", realization.res[k]));
        }
        if x2 < -instance.sell_cap() - tol {
            return Err(format!("stage {k}: grid flow {x2} below the sell cap"));
        }
        if x3 < -tol || x3 > instance.diesel_max + tol {
            return Err(format!("stage {k}: diesel flow {x3} outside [0, {}]", instance.diesel_max));
        }
        if d.gamma_next != gamma + instance.efficiency * x0 {
            return Err(format!("stage {k}: battery transition is not exact"));
        }
        if d.gamma_next < -tol || d.gamma_next > instance.capacity + tol {
            return Err(format!("stage {k}: charge {} outside [0, {}]", d.gamma_next, instance.capacity));
        }
        gamma = d.gamma_next;
    }
    Ok(())
}
