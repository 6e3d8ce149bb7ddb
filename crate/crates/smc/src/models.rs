use unify_opt::{solve_mip_with, Lp, LpError, Mip, MipOptions, Row, Sense, Status};

use crate::error::SmcError;
use crate::instance::SmcInstance;

/// Branch-and-bound node budget per solve; on exhaustion the incumbent is used.
pub const NODE_LIMIT: usize = 20_000;

/// `min Σ c_j x_j  s.t.  Σ_j a_ij x_j ≥ d_i,  x ∈ ℤ₊`.
///
/// Each `x_j` is bounded by the largest demand among the elements it covers,
/// which never cuts off an optimum.
pub fn build_deterministic_mip(instance: &SmcInstance, d: &[f64]) -> Mip {
    let n = instance.n_sets;
    let mut lp = Lp::new(n).with_objective(instance.costs.clone());
    for (j, elems) in instance.elements_of().iter().enumerate() {
        let ub = elems.iter().map(|&i| d[i]).fold(0.0, f64::max);
        lp.set_bounds(j, 0.0, ub);
    }
    for (i, c) in instance.covers.iter().enumerate() {
        if d[i] > 0.0 {
            let terms: Vec<(usize, f64)> = c.iter().map(|&j| (j, 1.0)).collect();
            lp.add_sparse(&terms, Sense::Ge, d[i]);
        }
    }
    Mip::new(lp, vec![true; n])
}

/// The sample average approximation model with coverage indicators:
///
/// ```text
/// min  Σ c_j x_j + 1/|Ω| Σ_ω Σ_i w_i s_iω
/// s.t. Σ_j a_ij x_j ≥ d_iω (1 − z_iω)
///      z_iω = 1  ⟹  s_iω ≥ d_iω − Σ_j a_ij x_j
///      x ∈ ℤ₊, z ∈ {0,1}, s ≥ 0
/// ```
///
/// Variables are laid out as `x` (sets), then `z` and `s` scenario-major.
pub fn build_saa_mip(instance: &SmcInstance, scenarios: &[Vec<f64>]) -> Mip {
    let (n, m, k) = (instance.n_sets, instance.n_elements, scenarios.len());
    let z0 = n;
    let s0 = n + m * k;
    let mut lp = Lp::new(n + 2 * m * k);
    for j in 0..n {
        lp.set_objective_coeff(j, instance.costs[j]);
    }
    for (j, elems) in instance.elements_of().iter().enumerate() {
        let ub = scenarios
            .iter()
            .flat_map(|d| elems.iter().map(move |&i| d[i]))
            .fold(0.0, f64::max);
        lp.set_bounds(j, 0.0, ub);
    }
    let mut integrality = vec![false; n + 2 * m * k];
    integrality[..n].iter_mut().for_each(|v| *v = true);
    let mut indicators = Vec::new();
    for (w, d) in scenarios.iter().enumerate() {
        for i in 0..m {
            let z = z0 + w * m + i;
            let s = s0 + w * m + i;
            lp.set_objective_coeff(s, instance.penalties[i] / k as f64);
            let mut terms: Vec<(usize, f64)> = instance.covers[i].iter().map(|&j| (j, 1.0)).collect();
            terms.push((z, d[i]));
            lp.add_sparse(&terms, Sense::Ge, d[i]);
            let mut row = vec![0.0; n + 2 * m * k];
            for &j in &instance.covers[i] {
                row[j] = 1.0;
            }
            row[s] = 1.0;
            indicators.push((z, Row::new(row, Sense::Ge, d[i])));
        }
    }
    let mut mip = Mip::new(lp, integrality);
    for (z, row) in indicators {
        mip.add_indicator(z, true, row);
    }
    mip
}

/// Equivalent SAA model with one coverage row per element.
///
/// For element `i` the expected shortage `1/|Ω| Σ_ω max(0, d_iω − cov_i)` is
/// convex piecewise linear in the coverage, with breakpoints at the distinct
/// sampled demands. It is written as `cov_i + Σ_k u_ik ≥ max_ω d_iω` with
/// segment variables `0 ≤ u_ik ≤ b_k − b_{k−1}` costing
/// `w_i · #{ω : d_iω ≥ b_k} / |Ω|` per unit; convexity makes the LP fill the
/// cheapest (top) segments first, so the optimum equals the indicator model.
pub fn build_compact_saa_mip(instance: &SmcInstance, scenarios: &[Vec<f64>]) -> Mip {
    let (n, k) = (instance.n_sets, scenarios.len() as f64);
    let mut segments: Vec<Vec<(f64, f64)>> = Vec::with_capacity(instance.n_elements);
    for i in 0..instance.n_elements {
        let mut ds: Vec<f64> = scenarios.iter().map(|d| d[i]).collect();
        ds.sort_by(f64::total_cmp);
        let mut segs = Vec::new();
        let mut prev = 0.0;
        let mut idx = 0;
        while idx < ds.len() {
            let b = ds[idx];
            if b > prev {
                let count = ds.len() - idx;
                segs.push((b - prev, instance.penalties[i] * count as f64 / k));
                prev = b;
            }
            while idx < ds.len() && ds[idx] == b {
                idx += 1;
            }
        }
        segments.push(segs);
    }
    let n_seg: usize = segments.iter().map(Vec::len).sum();
    let mut lp = Lp::new(n + n_seg);
    for j in 0..n {
        lp.set_objective_coeff(j, instance.costs[j]);
    }
    for (j, elems) in instance.elements_of().iter().enumerate() {
        let ub = scenarios
            .iter()
            .flat_map(|d| elems.iter().map(move |&i| d[i]))
            .fold(0.0, f64::max);
        lp.set_bounds(j, 0.0, ub);
    }
    let mut v = n;
    for (i, segs) in segments.iter().enumerate() {
        if segs.is_empty() {
            continue;
        }
        let mut terms: Vec<(usize, f64)> = instance.covers[i].iter().map(|&j| (j, 1.0)).collect();
        let mut top = 0.0;
        for &(len, cost) in segs {
            lp.set_objective_coeff(v, cost);
            lp.set_bounds(v, 0.0, len);
            terms.push((v, 1.0));
            top += len;
            v += 1;
        }
        lp.add_sparse(&terms, Sense::Ge, top);
    }
    let mut integrality = vec![false; n + n_seg];
    integrality[..n].iter_mut().for_each(|v| *v = true);
    Mip::new(lp, integrality)
}

/// Which SAA formulation [`solve_saa`] builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SaaForm {
    /// Indicator model with `z` and `s` per element and scenario.
    Indicator,
    /// Piecewise-linear shortage, one row per element.
    #[default]
    Compact,
}

fn solve_sets(mip: &Mip, n_sets: usize, integral: bool) -> Result<Vec<f64>, SmcError> {
    let opts = MipOptions {
        gap_tol: 1e-9,
        node_limit: NODE_LIMIT,
        integral_objective: integral,
        ..MipOptions::default()
    };
    let res = match solve_mip_with(mip, &opts) {
        Ok(r) => r,
        Err(LpError::NodeLimitExceeded { incumbent: Some(inc), .. }) => *inc,
        Err(e) => return Err(e.into()),
    };
    if res.status != Status::Optimal {
        return Err(SmcError::NotOptimal(format!("{:?}", res.status)));
    }
    Ok(res.primal[..n_sets].iter().map(|v| v.round()).collect())
}

fn integral_costs(instance: &SmcInstance) -> bool {
    instance.costs.iter().all(|c| c.fract() == 0.0)
}

/// Optimal integral `x` for known demands `d`.
pub fn solve_deterministic(instance: &SmcInstance, d: &[f64]) -> Result<Vec<f64>, SmcError> {
    if d.len() != instance.n_elements {
        return Err(SmcError::Invalid(format!("{} demands for {} elements", d.len(), instance.n_elements)));
    }
    if d.iter().all(|&v| v <= 0.0) {
        return Ok(vec![0.0; instance.n_sets]);
    }
    solve_sets(&build_deterministic_mip(instance, d), instance.n_sets, integral_costs(instance))
}

pub fn solve_saa(instance: &SmcInstance, scenarios: &[Vec<f64>], form: SaaForm) -> Result<Vec<f64>, SmcError> {
    if scenarios.is_empty() {
        return Err(SmcError::Invalid("empty scenario set".into()));
    }
    let mip = match form {
        SaaForm::Indicator => build_saa_mip(instance, scenarios),
        SaaForm::Compact => build_compact_saa_mip(instance, scenarios),
    };
    solve_sets(&mip, instance.n_sets, false)
}

/// Production cost plus penalties for unmet realized demand.
pub fn recourse_cost(instance: &SmcInstance, x: &[f64], d: &[f64]) -> f64 {
    let production: f64 = instance.costs.iter().zip(x).map(|(c, v)| c * v).sum();
    let shortage: f64 = instance
        .coverage(x)
        .iter()
        .zip(d)
        .zip(&instance.penalties)
        .map(|((cov, di), w)| w * (di - cov).max(0.0))
        .sum();
    production + shortage
}

/// Perfect-information optimum for realized demands `d`.
pub fn posterior_optimal(instance: &SmcInstance, d: &[f64]) -> Result<f64, SmcError> {
    let x = solve_deterministic(instance, d)?;
    Ok(recourse_cost(instance, &x, d))
}

/// Nonnegative integral `x` whose coverage meets `d`.
pub fn covers_demand(instance: &SmcInstance, x: &[f64], d: &[f64]) -> bool {
    x.len() == instance.n_sets
        && x.iter().all(|&v| v >= 0.0 && v.fract() == 0.0)
        && instance.coverage(x).iter().zip(d).all(|(c, di)| c + 1e-9 >= *di)
}
