//! Bounded-variable revised simplex with an explicit dense basis inverse.
//!
//! Structural variables are first mapped onto columns with a finite lower
//! bound: a finite lower bound is shifted away, an upper-only bound is
//! negated, and a free variable is split into a positive and a negative part.
//! Each row then gets a slack (inequalities) and, where the slack cannot start
//! in the basis, an artificial column for phase one.
//!
//! [`Resolver`] keeps the column mapping of one program so that the same
//! program with tighter bounds can be re-solved from an earlier optimal basis
//! by dual simplex, which is what branch-and-bound nodes need.

use crate::error::SolveError;
use crate::lp::{Duals, LinearProgram, Sense, SolveResult, Status};
use crate::scalar::Scalar;

const REFACTOR_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ColState {
    Basic,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ColKind<T> {
    Structural { var: usize, sign: T },
    Slack,
    Artificial,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

/// Column mapping and constraint data of one program.
struct Prepared<T> {
    n: usize,
    m: usize,
    offset: Vec<T>,
    row_sign: Vec<T>,
    kinds: Vec<ColKind<T>>,
    cols: Vec<Vec<(usize, T)>>,
    lb: Vec<T>,
    ub: Vec<T>,
    b: Vec<T>,
    start_basis: Vec<usize>,
    has_artificial: bool,
    cost: Vec<T>,
}

fn prepare<T: Scalar>(lp: &LinearProgram<T>) -> Prepared<T> {
    let n = lp.num_vars();
    let m = lp.num_rows();
    let mut offset = vec![T::zero(); n];
    let mut kinds: Vec<ColKind<T>> = Vec::new();
    let mut ub: Vec<T> = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower_bounds()[j], lp.upper_bounds()[j]);
        if l.is_finite() {
            offset[j] = l;
            kinds.push(ColKind::Structural { var: j, sign: T::one() });
            ub.push(if u.is_finite() { u - l } else { T::infinity() });
        } else if u.is_finite() {
            offset[j] = u;
            kinds.push(ColKind::Structural { var: j, sign: -T::one() });
            ub.push(T::infinity());
        } else {
            kinds.push(ColKind::Structural { var: j, sign: T::one() });
            ub.push(T::infinity());
            kinds.push(ColKind::Structural { var: j, sign: -T::one() });
            ub.push(T::infinity());
        }
    }

    let mut b: Vec<T> = lp
        .rows()
        .iter()
        .map(|row| {
            let shift: T = row.coeffs.iter().zip(&offset).map(|(&a, &o)| a * o).sum();
            row.rhs - shift
        })
        .collect();
    let row_sign: Vec<T> = b
        .iter()
        .map(|&v| if v < T::zero() { -T::one() } else { T::one() })
        .collect();
    for (bi, &s) in b.iter_mut().zip(&row_sign) {
        *bi = *bi * s;
    }

    let mut cols: Vec<Vec<(usize, T)>> = kinds
        .iter()
        .map(|kind| match *kind {
            ColKind::Structural { var, sign } => lp
                .rows()
                .iter()
                .enumerate()
                .filter(|(_, row)| row.coeffs[var] != T::zero())
                .map(|(i, row)| (i, row.coeffs[var] * sign * row_sign[i]))
                .collect(),
            _ => unreachable!(),
        })
        .collect();

    let mut basis = vec![usize::MAX; m];
    for (i, row) in lp.rows().iter().enumerate() {
        let coef = match row.sense {
            Sense::Le => T::one(),
            Sense::Ge => -T::one(),
            Sense::Eq => continue,
        } * row_sign[i];
        cols.push(vec![(i, coef)]);
        kinds.push(ColKind::Slack);
        ub.push(T::infinity());
        if coef > T::zero() {
            basis[i] = cols.len() - 1;
        }
    }
    let mut has_artificial = false;
    for i in 0..m {
        if basis[i] == usize::MAX {
            cols.push(vec![(i, T::one())]);
            kinds.push(ColKind::Artificial);
            ub.push(T::infinity());
            basis[i] = cols.len() - 1;
            has_artificial = true;
        }
    }
    let cost = kinds
        .iter()
        .map(|k| match *k {
            ColKind::Structural { var, sign } => lp.objective()[var] * sign,
            _ => T::zero(),
        })
        .collect();
    Prepared {
        n,
        m,
        offset,
        row_sign,
        lb: vec![T::zero(); cols.len()],
        kinds,
        cols,
        ub,
        b,
        start_basis: basis,
        has_artificial,
        cost,
    }
}

/// Basis and nonbasic bound states of an optimal tableau.
#[derive(Debug, Clone)]
pub(crate) struct WarmStart {
    basis: Vec<usize>,
    state: Vec<ColState>,
}

struct Tableau<'a, T> {
    m: usize,
    cols: &'a [Vec<(usize, T)>],
    b: &'a [T],
    lb: Vec<T>,
    ub: Vec<T>,
    basis: Vec<usize>,
    state: Vec<ColState>,
    x: Vec<T>,
    binv: Vec<T>,
    since_refactor: usize,
    iterations: usize,
    max_iterations: usize,
    bland_after: usize,
}

impl<'a, T: Scalar> Tableau<'a, T> {
    fn new(p: &'a Prepared<T>, lb: Vec<T>, ub: Vec<T>, basis: Vec<usize>, state: Vec<ColState>) -> Self {
        let (m, total) = (p.m, p.cols.len());
        let mut binv = vec![T::zero(); m * m];
        for i in 0..m {
            binv[i * m + i] = T::one();
        }
        let x = (0..total)
            .map(|k| match state[k] {
                ColState::Upper => ub[k],
                _ => lb[k],
            })
            .collect();
        Tableau {
            m,
            cols: &p.cols,
            b: &p.b,
            lb,
            ub,
            basis,
            state,
            x,
            binv,
            since_refactor: 0,
            iterations: 0,
            max_iterations: 50 * (m + total) + 1000,
            bland_after: (3 * p.n).max(1),
        }
    }

    fn warm_start(&self) -> WarmStart {
        WarmStart {
            basis: self.basis.clone(),
            state: self.state.clone(),
        }
    }

    fn row_prices(&self, cost: &[T]) -> Vec<T> {
        let m = self.m;
        let mut y = vec![T::zero(); m];
        for (i, &k) in self.basis.iter().enumerate() {
            let cb = cost[k];
            if cb == T::zero() {
                continue;
            }
            let row = &self.binv[i * m..(i + 1) * m];
            for (yr, &v) in y.iter_mut().zip(row) {
                *yr = *yr + cb * v;
            }
        }
        y
    }

    fn reduced_cost(&self, cost: &[T], y: &[T], k: usize) -> T {
        let mut d = cost[k];
        for &(r, v) in &self.cols[k] {
            d = d - y[r] * v;
        }
        d
    }

    fn ftran(&self, k: usize) -> Vec<T> {
        let m = self.m;
        let mut alpha = vec![T::zero(); m];
        for &(r, v) in &self.cols[k] {
            for (i, a) in alpha.iter_mut().enumerate() {
                *a = *a + self.binv[i * m + r] * v;
            }
        }
        alpha
    }

    fn count_iteration(&mut self) -> Result<(), SolveError<T>> {
        self.iterations += 1;
        if self.iterations > self.max_iterations {
            return Err(SolveError::NumericalFailure(format!(
                "simplex iteration limit ({}) reached",
                self.max_iterations
            )));
        }
        Ok(())
    }

    fn after_pivot(&mut self) -> Result<(), SolveError<T>> {
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    /// Primal simplex from a primal feasible basis.
    fn run_phase(&mut self, cost: &[T]) -> Result<PhaseOutcome, SolveError<T>> {
        let tol = T::feasibility_tol();
        let ptol = T::pivot_tol();
        let mut degenerate_run = 0usize;
        loop {
            self.count_iteration()?;
            let bland = degenerate_run >= self.bland_after;
            let y = self.row_prices(cost);

            // Pricing.
            let mut entering: Option<(usize, T)> = None;
            for k in 0..self.cols.len() {
                let st = self.state[k];
                if st == ColState::Basic || self.ub[k] == self.lb[k] {
                    continue;
                }
                let d = self.reduced_cost(cost, &y, k);
                let eligible = match st {
                    ColState::Lower => d < -tol,
                    ColState::Upper => d > tol,
                    ColState::Basic => false,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    entering = Some((k, d));
                    break;
                }
                match entering {
                    Some((_, best)) if d.abs() <= best.abs() => {}
                    _ => entering = Some((k, d)),
                }
            }
            let Some((q, _)) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };

            let alpha = self.ftran(q);
            let dir = if self.state[q] == ColState::Lower { T::one() } else { -T::one() };

            // Ratio test (Harris two-pass): pass one finds the largest step
            // that keeps every basic variable within `tol` of its bounds,
            // pass two picks, among rows blocking before that step, the one
            // with the largest pivot. Bland mode uses the exact minimum ratio
            // with lowest-index ties.
            let ratio = |i: usize, relax: T| -> Option<T> {
                let delta = dir * alpha[i];
                if delta.abs() <= ptol {
                    return None;
                }
                let k = self.basis[i];
                let xi = self.x[k];
                if delta > T::zero() {
                    Some((xi - self.lb[k] + relax) / delta)
                } else if self.ub[k].is_finite() {
                    Some((self.ub[k] - xi + relax) / (-delta))
                } else {
                    None
                }
            };
            let relax = if bland { T::zero() } else { tol };
            let mut theta_max = T::infinity();
            for i in 0..self.m {
                if let Some(t) = ratio(i, relax) {
                    theta_max = theta_max.min(t.max(T::zero()));
                }
            }
            let flip = self.ub[q] - self.lb[q];
            if theta_max == T::infinity() && flip == T::infinity() {
                return Ok(PhaseOutcome::Unbounded);
            }
            let slack = if bland { tol * T::lit(1e-3) } else { T::zero() };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.m {
                let Some(t) = ratio(i, T::zero()) else { continue };
                let t = t.max(T::zero());
                if t > theta_max + slack {
                    continue;
                }
                leave = match leave {
                    None => Some((i, t)),
                    Some((prev, tp)) => {
                        let better = if bland {
                            self.basis[i] < self.basis[prev]
                        } else {
                            alpha[i].abs() > alpha[prev].abs()
                        };
                        if better {
                            Some((i, t))
                        } else {
                            Some((prev, tp))
                        }
                    }
                };
            }
            let theta = leave.map_or(T::infinity(), |(_, t)| t);

            if flip <= theta {
                for i in 0..self.m {
                    let k = self.basis[i];
                    self.x[k] = self.x[k] - flip * dir * alpha[i];
                }
                if self.state[q] == ColState::Lower {
                    self.state[q] = ColState::Upper;
                    self.x[q] = self.ub[q];
                } else {
                    self.state[q] = ColState::Lower;
                    self.x[q] = self.lb[q];
                }
                degenerate_run = 0;
                continue;
            }

            let (r, _) = leave.expect("finite ratio implies a leaving row");
            let leaving = self.basis[r];
            let delta_r = dir * alpha[r];

            for i in 0..self.m {
                let k = self.basis[i];
                self.x[k] = self.x[k] - theta * dir * alpha[i];
            }
            self.x[q] = self.x[q] + dir * theta;
            if delta_r > T::zero() {
                self.state[leaving] = ColState::Lower;
                self.x[leaving] = self.lb[leaving];
            } else {
                self.state[leaving] = ColState::Upper;
                self.x[leaving] = self.ub[leaving];
            }
            self.state[q] = ColState::Basic;
            self.basis[r] = q;
            self.pivot_inverse(r, &alpha);

            if theta <= tol {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.after_pivot()?;
        }
    }

    /// Dual simplex from a dual feasible basis. Returns `false` when the
    /// program is infeasible.
    fn run_dual(&mut self, cost: &[T]) -> Result<bool, SolveError<T>> {
        let tol = T::feasibility_tol();
        let ptol = T::pivot_tol();
        let m = self.m;
        loop {
            self.count_iteration()?;
            // Leaving row: the largest bound violation.
            let mut leave: Option<(usize, T, bool)> = None;
            for i in 0..m {
                let k = self.basis[i];
                let (below, above) = (self.lb[k] - self.x[k], self.x[k] - self.ub[k]);
                let (viol, to_lower) = if below > above { (below, true) } else { (above, false) };
                if viol > tol && leave.is_none_or(|(_, v, _)| viol > v) {
                    leave = Some((i, viol, to_lower));
                }
            }
            let Some((r, _, to_lower)) = leave else {
                return Ok(true);
            };

            let y = self.row_prices(cost);
            let rho = &self.binv[r * m..(r + 1) * m];
            let mut entering: Option<(usize, T, T)> = None;
            for k in 0..self.cols.len() {
                let st = self.state[k];
                if st == ColState::Basic || self.ub[k] == self.lb[k] {
                    continue;
                }
                let a: T = self.cols[k].iter().map(|&(i, v)| rho[i] * v).sum();
                if a.abs() <= ptol {
                    continue;
                }
                // The leaving variable moves by `−a·Δx_k`; it must head back
                // towards the violated bound.
                let eligible = match (st, to_lower) {
                    (ColState::Lower, true) => a < T::zero(),
                    (ColState::Upper, true) => a > T::zero(),
                    (ColState::Lower, false) => a > T::zero(),
                    (ColState::Upper, false) => a < T::zero(),
                    (ColState::Basic, _) => false,
                };
                if !eligible {
                    continue;
                }
                let d = self.reduced_cost(cost, &y, k);
                let ratio = d.abs() / a.abs();
                let better = match entering {
                    None => true,
                    Some((_, best, best_a)) => ratio < best - tol || (ratio <= best + tol && a.abs() > best_a.abs()),
                };
                if better {
                    entering = Some((k, ratio, a));
                }
            }
            let Some((q, _, _)) = entering else {
                return Ok(false);
            };

            let alpha = self.ftran(q);
            let leaving = self.basis[r];
            let target = if to_lower { self.lb[leaving] } else { self.ub[leaving] };
            let step = (self.x[leaving] - target) / alpha[r];
            for i in 0..m {
                let k = self.basis[i];
                self.x[k] = self.x[k] - step * alpha[i];
            }
            self.x[q] = self.x[q] + step;
            self.x[leaving] = target;
            self.state[leaving] = if to_lower { ColState::Lower } else { ColState::Upper };
            self.state[q] = ColState::Basic;
            self.basis[r] = q;
            self.pivot_inverse(r, &alpha);
            self.after_pivot()?;
        }
    }

    fn pivot_inverse(&mut self, r: usize, alpha: &[T]) {
        let m = self.m;
        let piv = alpha[r];
        for v in &mut self.binv[r * m..(r + 1) * m] {
            *v = *v / piv;
        }
        let (head, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, tail) = rest.split_at_mut(m);
        for (i, chunk) in head.chunks_mut(m).enumerate() {
            let f = alpha[i];
            if f != T::zero() {
                for (v, &p) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *v = *v - f * p;
                }
            }
        }
        for (off, chunk) in tail.chunks_mut(m).enumerate() {
            let f = alpha[r + 1 + off];
            if f != T::zero() {
                for (v, &p) in chunk.iter_mut().zip(pivot_row.iter()) {
                    *v = *v - f * p;
                }
            }
        }
    }

    /// Rebuilds the basis inverse from scratch and recomputes basic values.
    fn refactor(&mut self) -> Result<(), SolveError<T>> {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        let mut a = vec![T::zero(); m * m];
        for (c, &k) in self.basis.iter().enumerate() {
            for &(r, v) in &self.cols[k] {
                a[r * m + c] = v;
            }
        }
        let mut inv = vec![T::zero(); m * m];
        for i in 0..m {
            inv[i * m + i] = T::one();
        }
        for col in 0..m {
            let mut piv = col;
            let mut best = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= T::epsilon() * T::lit(16.0) {
                return Err(SolveError::NumericalFailure("singular basis during refactorization".into()));
            }
            if piv != col {
                for c in 0..m {
                    a.swap(col * m + c, piv * m + c);
                    inv.swap(col * m + c, piv * m + c);
                }
            }
            let p = a[col * m + col];
            for c in 0..m {
                a[col * m + c] = a[col * m + c] / p;
                inv[col * m + c] = inv[col * m + c] / p;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = a[r * m + col];
                if f == T::zero() {
                    continue;
                }
                for c in 0..m {
                    a[r * m + c] = a[r * m + c] - f * a[col * m + c];
                    inv[r * m + c] = inv[r * m + c] - f * inv[col * m + c];
                }
            }
        }
        self.binv = inv;

        let mut rhs = self.b.to_vec();
        for k in 0..self.cols.len() {
            if self.state[k] != ColState::Basic && self.x[k] != T::zero() {
                for &(r, v) in &self.cols[k] {
                    rhs[r] = rhs[r] - v * self.x[k];
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: T = row.iter().zip(&rhs).map(|(&a, &b)| a * b).sum();
            self.x[self.basis[i]] = v;
        }
        Ok(())
    }
}

/// Maps an optimal (or unbounded) tableau back onto the original variables.
fn finish<T: Scalar>(
    lp: &LinearProgram<T>,
    p: &Prepared<T>,
    tab: &Tableau<'_, T>,
    outcome: PhaseOutcome,
) -> SolveResult<T> {
    let n = p.n;
    let mut primal = p.offset.clone();
    for (k, kind) in p.kinds.iter().enumerate() {
        if let ColKind::Structural { var, sign } = *kind {
            primal[var] = primal[var] + sign * tab.x[k];
        }
    }
    for j in 0..n {
        // Snap onto bounds that are violated only by round-off.
        let (l, u) = (lp.lower_bounds()[j], lp.upper_bounds()[j]);
        if primal[j] < l {
            primal[j] = l;
        }
        if primal[j] > u {
            primal[j] = u;
        }
    }

    if let PhaseOutcome::Unbounded = outcome {
        return SolveResult {
            status: Status::Unbounded,
            primal,
            objective: T::neg_infinity(),
            duals: None,
        };
    }

    let y_internal = tab.row_prices(&p.cost);
    let row: Vec<T> = y_internal.iter().zip(&p.row_sign).map(|(&y, &s)| y * s).collect();
    let mut lower = vec![T::zero(); n];
    let mut upper = vec![T::zero(); n];
    for j in 0..n {
        let mut d = lp.objective()[j];
        for (i, r) in lp.rows().iter().enumerate() {
            d = d - row[i] * r.coeffs[j];
        }
        if d > T::zero() && lp.lower_bounds()[j].is_finite() {
            lower[j] = d;
        } else if d < T::zero() && lp.upper_bounds()[j].is_finite() {
            upper[j] = -d;
        }
    }
    let objective = lp.objective_value(&primal);
    SolveResult {
        status: Status::Optimal,
        primal,
        objective,
        duals: Some(Duals { row, lower, upper }),
    }
}

/// Two-phase primal simplex from the slack/artificial basis.
fn solve_cold<T: Scalar>(lp: &LinearProgram<T>, p: &Prepared<T>) -> Result<(SolveResult<T>, Option<WarmStart>), SolveError<T>> {
    let tol = T::feasibility_tol();
    let total = p.cols.len();
    let mut state = vec![ColState::Lower; total];
    for &k in &p.start_basis {
        state[k] = ColState::Basic;
    }
    let mut tab = Tableau::new(p, p.lb.clone(), p.ub.clone(), p.start_basis.clone(), state);
    for (i, &k) in p.start_basis.iter().enumerate() {
        tab.x[k] = p.b[i];
    }

    if p.has_artificial {
        let cost1: Vec<T> = p
            .kinds
            .iter()
            .map(|k| match k {
                ColKind::Artificial => T::one(),
                _ => T::zero(),
            })
            .collect();
        tab.run_phase(&cost1)?;
        tab.refactor()?;
        let infeas: T = p
            .kinds
            .iter()
            .zip(&tab.x)
            .filter(|(k, _)| matches!(k, ColKind::Artificial))
            .map(|(_, &v)| v.max(T::zero()))
            .sum();
        let scale = p.b.iter().fold(T::one(), |acc, v| acc.max(v.abs()));
        if infeas > tol * scale {
            return Ok((SolveResult::infeasible(), None));
        }
        for k in 0..total {
            if matches!(p.kinds[k], ColKind::Artificial) {
                tab.ub[k] = T::zero();
                if tab.state[k] != ColState::Basic {
                    tab.x[k] = T::zero();
                    tab.state[k] = ColState::Lower;
                }
            }
        }
    }

    let outcome = tab.run_phase(&p.cost)?;
    tab.refactor()?;
    let warm = matches!(outcome, PhaseOutcome::Optimal).then(|| tab.warm_start());
    Ok((finish(lp, p, &tab, outcome), warm))
}

/// Solves `lp` to optimality, or reports infeasibility / unboundedness.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<SolveResult<T>, SolveError<T>> {
    lp.validate()?;
    let p = prepare(lp);
    solve_cold(lp, &p).map(|(r, _)| r)
}

/// One program re-solved under tighter variable bounds.
pub(crate) struct Resolver<T> {
    lp: LinearProgram<T>,
    prepared: Prepared<T>,
}

impl<T: Scalar> Resolver<T> {
    pub(crate) fn new(lp: &LinearProgram<T>) -> Result<Self, SolveError<T>> {
        lp.validate()?;
        Ok(Resolver {
            prepared: prepare(lp),
            lp: lp.clone(),
        })
    }

    /// Internal column bounds for the given variable bounds, or `None` when a
    /// split free variable received a finite bound.
    fn column_bounds(&self, lower: &[T], upper: &[T]) -> Option<(Vec<T>, Vec<T>)> {
        let p = &self.prepared;
        let mut lb = p.lb.clone();
        let mut ub = p.ub.clone();
        let root_lo = self.lp.lower_bounds();
        let root_up = self.lp.upper_bounds();
        for (k, kind) in p.kinds.iter().enumerate() {
            match *kind {
                ColKind::Structural { var, .. } => {
                    let (l, u) = (lower[var], upper[var]);
                    if root_lo[var].is_finite() {
                        lb[k] = l - p.offset[var];
                        ub[k] = u - p.offset[var];
                    } else if root_up[var].is_finite() {
                        lb[k] = p.offset[var] - u;
                        ub[k] = p.offset[var] - l;
                    } else if l.is_finite() || u.is_finite() {
                        return None;
                    }
                }
                ColKind::Artificial => ub[k] = T::zero(),
                ColKind::Slack => {}
            }
        }
        Some((lb, ub))
    }

    /// Solves with the given bounds; starts from `warm` by dual simplex when
    /// possible and falls back to a cold two-phase solve otherwise.
    pub(crate) fn solve(
        &self,
        lower: &[T],
        upper: &[T],
        warm: Option<&WarmStart>,
    ) -> Result<(SolveResult<T>, Option<WarmStart>), SolveError<T>> {
        let mut node = self.lp.clone();
        for j in 0..node.num_vars() {
            node.set_bounds(j, lower[j], upper[j]);
        }
        if lower.iter().zip(upper).any(|(l, u)| l > u) {
            return Ok((SolveResult::infeasible(), None));
        }
        if let (Some(w), Some((lb, ub))) = (warm, self.column_bounds(lower, upper)) {
            if let Ok(Some(res)) = self.solve_warm(&node, w, lb, ub) {
                return Ok(res);
            }
        }
        // Cold solve of the node program; its basis is reusable only when
        // the column mapping coincides with the root's.
        let p = prepare(&node);
        let (res, warm) = solve_cold(&node, &p)?;
        let same = p.kinds == self.prepared.kinds && p.cols.len() == self.prepared.cols.len();
        Ok((res, if same { warm } else { None }))
    }

    fn solve_warm(
        &self,
        node: &LinearProgram<T>,
        w: &WarmStart,
        lb: Vec<T>,
        ub: Vec<T>,
    ) -> Result<Option<(SolveResult<T>, Option<WarmStart>)>, SolveError<T>> {
        let p = &self.prepared;
        let mut state = w.state.clone();
        for k in 0..state.len() {
            if state[k] == ColState::Upper && !ub[k].is_finite() {
                state[k] = ColState::Lower;
            }
        }
        let mut tab = Tableau::new(p, lb, ub, w.basis.clone(), state);
        tab.refactor()?;
        if !tab.run_dual(&p.cost)? {
            return Ok(Some((SolveResult::infeasible(), None)));
        }
        let outcome = tab.run_phase(&p.cost)?;
        tab.refactor()?;
        if !matches!(outcome, PhaseOutcome::Optimal) {
            return Ok(None);
        }
        let res = finish(node, p, &tab, outcome);
        // Round-off can leave the recomputed point slightly infeasible; let
        // the cold path handle that rare case.
        let scale = p.b.iter().fold(T::one(), |acc, v| acc.max(v.abs()));
        if node.max_violation(&res.primal) > T::feasibility_tol() * scale {
            return Ok(None);
        }
        Ok(Some((res, Some(tab.warm_start()))))
    }
}
