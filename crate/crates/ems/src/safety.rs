use crate::error::EmsError;
use crate::instance::{EmsInstance, DIESEL, GRID, NUM_FLOWS, RES, STORAGE};
use crate::online::StageDispatch;

/// Stop once the balance is met to this absolute tolerance.
pub const PROJECTION_TOL: f64 = 1e-9;

fn clipped_sum(y: &[f64], lo: &[f64], hi: &[f64], tau: f64) -> f64 {
    y.iter().zip(lo).zip(hi).map(|((v, l), h)| (v + tau).clamp(*l, *h)).sum()
}

/// Euclidean projection of `y` onto `{z : Σ z = target, lo ≤ z ≤ hi}`.
///
/// The solution is `z(τ) = clip(y + τ, lo, hi)` for the balance multiplier
/// `τ`, found by bisection on the monotone map `τ ↦ Σ z(τ)`.
pub fn project_onto_balance(y: &[f64], lo: &[f64], hi: &[f64], target: f64) -> Result<Vec<f64>, EmsError> {
    if y.len() != lo.len() || y.len() != hi.len() {
        return Err(EmsError::EmptyFeasible("bound lengths differ from the point".into()));
    }
    if lo.iter().zip(hi).any(|(l, h)| l > h) {
        return Err(EmsError::EmptyFeasible("a lower bound exceeds its upper bound".into()));
    }
    let (sum_lo, sum_hi): (f64, f64) = (lo.iter().sum(), hi.iter().sum());
    if sum_lo > target + PROJECTION_TOL || sum_hi < target - PROJECTION_TOL {
        return Err(EmsError::EmptyFeasible(format!("balance {target} outside [{sum_lo}, {sum_hi}]")));
    }
    let f = |tau: f64| clipped_sum(y, lo, hi, tau) - target;
    let mut step = 1.0;
    let (mut a, mut b) = (0.0, 0.0);
    while f(a) > 0.0 {
        a -= step;
        step *= 2.0;
    }
    step = 1.0;
    while f(b) < 0.0 {
        b += step;
        step *= 2.0;
    }
    let mut tau = 0.5 * (a + b);
    for _ in 0..2000 {
        let r = f(tau);
        if r.abs() <= PROJECTION_TOL {
            break;
        }
        if r > 0.0 {
            b = tau;
        } else {
            a = tau;
        }
        let mid = 0.5 * (a + b);
        if mid == tau {
            break;
        }
        tau = mid;
    }
    Ok(y.iter().zip(lo).zip(hi).map(|((v, l), h)| (v + tau).clamp(*l, *h)).collect())
}

/// Supply-side bounds `(−x0, x1, x2, x3)` at charge `gamma`: the battery
/// window folded into the storage interval, RES up to its realization, grid
/// sales up to the cap and unbounded purchases.
pub fn supply_bounds(instance: &EmsInstance, gamma: f64, res: f64) -> ([f64; NUM_FLOWS], [f64; NUM_FLOWS]) {
    let (lo0, hi0) = instance.storage_bounds(gamma);
    (
        [-hi0, 0.0, -instance.sell_cap(), 0.0],
        [-lo0, res, f64::INFINITY, instance.diesel_max],
    )
}

/// Projects proposed flows `[x0, x1, x2, x3]` onto the stage's feasible set
/// and returns the projected dispatch.
pub fn safety_layer_project(
    instance: &EmsInstance,
    gamma: f64,
    proposed: &[f64],
    res: f64,
    load: f64,
) -> Result<StageDispatch, EmsError> {
    if proposed.len() != NUM_FLOWS {
        return Err(EmsError::EmptyFeasible(format!("{} proposed flows", proposed.len())));
    }
    let (lo, hi) = supply_bounds(instance, gamma, res);
    let y = [-proposed[STORAGE], proposed[RES], proposed[GRID], proposed[DIESEL]];
    let z = project_onto_balance(&y, &lo, &hi, load)?;
    let x0 = -z[0];
    Ok(StageDispatch {
        flows: [x0, z[1], z[2], z[3]],
        gamma,
        gamma_next: gamma + instance.efficiency * x0,
    })
}

