//! Mixed-integer models and a best-bound branch-and-bound solver.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::SolveError;
use crate::lp::{LinearProgram, Row, Sense, SolveResult, Status};
use crate::scalar::Scalar;
use std::rc::Rc;

use crate::simplex::{Resolver, WarmStart};

/// `binary == active ⟹ row holds`.
#[derive(Debug, Clone, PartialEq)]
pub struct Indicator<T> {
    pub binary: usize,
    pub active: bool,
    pub row: Row<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipModel<T> {
    pub base: LinearProgram<T>,
    pub integrality: Vec<bool>,
    pub indicators: Vec<Indicator<T>>,
}

impl<T: Scalar> MipModel<T> {
    pub fn new(base: LinearProgram<T>, integrality: Vec<bool>) -> Self {
        MipModel {
            base,
            integrality,
            indicators: Vec::new(),
        }
    }

    /// Registers an indicator; the binary is marked integral with bounds [0, 1].
    pub fn add_indicator(&mut self, binary: usize, active: bool, row: Row<T>) {
        self.integrality[binary] = true;
        self.base.set_bounds(binary, T::zero(), T::one());
        self.indicators.push(Indicator { binary, active, row });
    }

    pub fn validate(&self) -> Result<(), SolveError<T>> {
        self.base.validate()?;
        let n = self.base.num_vars();
        if self.integrality.len() != n {
            return Err(SolveError::MalformedModel("integrality mask length differs from num_vars".into()));
        }
        for (k, ind) in self.indicators.iter().enumerate() {
            if ind.binary >= n || ind.row.coeffs.len() != n {
                return Err(SolveError::MalformedModel(format!("indicator {k} has inconsistent dimensions")));
            }
            let (l, u) = (self.base.lower_bounds()[ind.binary], self.base.upper_bounds()[ind.binary]);
            if !self.integrality[ind.binary] || l < T::zero() || u > T::one() {
                return Err(SolveError::MalformedModel(format!(
                    "indicator {k} variable {} is not a [0,1] integer",
                    ind.binary
                )));
            }
            if ind.row.coeffs[ind.binary] != T::zero() {
                return Err(SolveError::MalformedModel(format!(
                    "indicator {k} row references its own binary"
                )));
            }
        }
        Ok(())
    }

    /// LP with every indicator replaced by big-M rows. Each M is the largest
    /// violation the row can attain inside the variable bounds.
    pub fn linearized(&self) -> Result<LinearProgram<T>, SolveError<T>> {
        self.validate()?;
        let mut lp = self.base.clone();
        let lo = self.base.lower_bounds();
        let up = self.base.upper_bounds();
        for (k, ind) in self.indicators.iter().enumerate() {
            let (mut min_act, mut max_act) = (T::zero(), T::zero());
            for (j, &a) in ind.row.coeffs.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let (p, q) = (a * lo[j], a * up[j]);
                min_act = min_act + p.min(q);
                max_act = max_act + p.max(q);
            }
            let senses: &[Sense] = match ind.row.sense {
                Sense::Eq => &[Sense::Ge, Sense::Le],
                Sense::Ge => &[Sense::Ge],
                Sense::Le => &[Sense::Le],
            };
            for &sense in senses {
                let big_m = match sense {
                    Sense::Ge => ind.row.rhs - min_act,
                    _ => max_act - ind.row.rhs,
                };
                if !big_m.is_finite() {
                    return Err(SolveError::MalformedModel(format!(
                        "indicator {k} row is unbounded over the variable box"
                    )));
                }
                if big_m <= T::zero() {
                    continue;
                }
                // Ge: a·x >= rhs - M·(off),  off = 1 - b (active = 1) or b (active = 0)
                let mut coeffs = ind.row.coeffs.clone();
                let (coef_b, rhs) = match (sense, ind.active) {
                    (Sense::Ge, true) => (-big_m, ind.row.rhs - big_m),
                    (Sense::Ge, false) => (big_m, ind.row.rhs),
                    (_, true) => (big_m, ind.row.rhs + big_m),
                    (_, false) => (-big_m, ind.row.rhs),
                };
                coeffs[ind.binary] = coef_b;
                lp.add_constraint(coeffs, sense, rhs);
            }
        }
        Ok(lp)
    }

    /// Checks rows, bounds, integrality and indicators at `x`.
    pub fn is_feasible(&self, x: &[T], tol: T) -> bool {
        if self.base.max_violation(x) > tol {
            return false;
        }
        for (j, &int) in self.integrality.iter().enumerate() {
            if int && (x[j] - x[j].round()).abs() > tol {
                return false;
            }
        }
        self.indicators.iter().all(|ind| {
            let on = if ind.active { T::one() } else { T::zero() };
            (x[ind.binary] - on).abs() > T::lit(0.5) || ind.row.violation(x) <= tol
        })
    }
}

#[derive(Debug, Clone)]
pub struct MipOptions<T> {
    /// Relative optimality gap at which search stops.
    pub gap_tol: T,
    pub node_limit: usize,
    /// Optional starting point; used as incumbent when feasible.
    pub incumbent: Option<Vec<T>>,
    /// Every feasible point has an integral objective value, so nodes whose
    /// bound rounds up to the incumbent can be pruned.
    pub integral_objective: bool,
}

impl<T: Scalar> Default for MipOptions<T> {
    fn default() -> Self {
        MipOptions {
            gap_tol: T::lit(1e-6),
            node_limit: 200_000,
            incumbent: None,
            integral_objective: false,
        }
    }
}

struct Node<T> {
    bound: T,
    id: usize,
    lower: Vec<T>,
    upper: Vec<T>,
    primal: Vec<T>,
    warm: Option<Rc<WarmStart>>,
}

impl<T: Scalar> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Node<T> {}
impl<T: Scalar> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Node<T> {
    // Max-heap: the smallest bound (then the oldest node) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.id.cmp(&self.id))
    }
}

pub fn solve_mip<T: Scalar>(mip: &MipModel<T>, gap_tol: T) -> Result<SolveResult<T>, SolveError<T>> {
    solve_mip_with(
        mip,
        &MipOptions {
            gap_tol,
            ..MipOptions::default()
        },
    )
}

pub fn solve_mip_with<T: Scalar>(
    mip: &MipModel<T>,
    opts: &MipOptions<T>,
) -> Result<SolveResult<T>, SolveError<T>> {
    let lp = mip.linearized()?;
    let int_tol = T::integrality_tol();
    let check_tol = T::lit(1e-6).max(T::feasibility_tol());
    let ints: Vec<usize> = (0..lp.num_vars()).filter(|&j| mip.integrality[j]).collect();

    let mut incumbent: Option<(Vec<T>, T)> = None;
    let offer = |x: Vec<T>, incumbent: &mut Option<(Vec<T>, T)>| {
        if mip.is_feasible(&x, check_tol) {
            let obj = lp.objective_value(&x);
            if incumbent.as_ref().is_none_or(|(_, best)| obj < *best) {
                *incumbent = Some((x, obj));
            }
        }
    };
    if let Some(start) = &opts.incumbent {
        if start.len() == lp.num_vars() {
            offer(start.clone(), &mut incumbent);
        }
    }

    let prune_level = |inc: &Option<(Vec<T>, T)>| -> T {
        match inc {
            Some((_, obj)) => {
                let tiny = T::lit(1e-9) * (T::one() + obj.abs());
                let mut slack = (opts.gap_tol * obj.abs()).max(tiny);
                if opts.integral_objective {
                    slack = slack.max(T::one() - T::lit(1e-6) * (T::one() + obj.abs()));
                }
                *obj - slack
            }
            None => T::infinity(),
        }
    };

    let resolver = Resolver::new(&lp)?;

    let mut nodes = 1usize;
    let root_lower = lp.lower_bounds().to_vec();
    let root_upper = lp.upper_bounds().to_vec();
    let (root, root_warm) = resolver.solve(&root_lower, &root_upper, None)?;
    match root.status {
        Status::Infeasible => return Ok(SolveResult::infeasible()),
        Status::Unbounded => {
            return Ok(SolveResult {
                status: Status::Unbounded,
                primal: root.primal,
                objective: T::neg_infinity(),
                duals: None,
            })
        }
        Status::Optimal => {}
    }

    let mut heap = BinaryHeap::new();
    let mut next_id = 0usize;
    let mut push = |heap: &mut BinaryHeap<Node<T>>, lower, upper, res: SolveResult<T>, warm: Option<WarmStart>| {
        heap.push(Node {
            bound: res.objective,
            id: next_id,
            lower,
            upper,
            primal: res.primal,
            warm: warm.map(Rc::new),
        });
        next_id += 1;
    };
    push(&mut heap, root_lower, root_upper, root, root_warm);

    while let Some(node) = heap.pop() {
        if node.bound >= prune_level(&incumbent) {
            break;
        }
        let branch = ints
            .iter()
            .map(|&j| {
                let f = node.primal[j] - node.primal[j].floor();
                (j, f.min(T::one() - f))
            })
            .filter(|&(_, frac)| frac > int_tol)
            .fold(None::<(usize, T)>, |best, (j, frac)| match best {
                Some((_, bf)) if frac <= bf => best,
                _ => Some((j, frac)),
            });
        let Some((j, _)) = branch else {
            let mut x = node.primal;
            for &k in &ints {
                x[k] = x[k].round();
            }
            offer(x, &mut incumbent);
            continue;
        };

        // Rounding heuristic.
        let mut rounded = node.primal.clone();
        for &k in &ints {
            rounded[k] = rounded[k].round();
        }
        offer(rounded, &mut incumbent);

        let v = node.primal[j];
        let children = [(node.lower[j], v.floor()), (v.ceil(), node.upper[j])];
        for (lo_j, up_j) in children {
            if lo_j > up_j {
                continue;
            }
            if nodes >= opts.node_limit {
                let bound = heap
                    .iter()
                    .map(|n| n.bound)
                    .fold(node.bound, |a, b| a.min(b));
                return Err(SolveError::NodeLimitExceeded {
                    nodes,
                    incumbent: incumbent.map(|(x, obj)| {
                        Box::new(SolveResult {
                            status: Status::Optimal,
                            primal: x,
                            objective: obj,
                            duals: None,
                        })
                    }),
                    bound,
                });
            }
            let mut lower = node.lower.clone();
            let mut upper = node.upper.clone();
            lower[j] = lo_j;
            upper[j] = up_j;
            nodes += 1;
            let (res, warm) = resolver.solve(&lower, &upper, node.warm.as_deref())?;
            if res.status != Status::Optimal || res.objective >= prune_level(&incumbent) {
                continue;
            }
            push(&mut heap, lower, upper, res, warm);
        }
    }

    match incumbent {
        Some((primal, objective)) => Ok(SolveResult {
            status: Status::Optimal,
            primal,
            objective,
            duals: None,
        }),
        None => Ok(SolveResult::infeasible()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_set_forced_by_coverage() {
        // one set of cost 5 covering one element with demand 2
        let mut lp = LinearProgram::<f64>::new(1).with_objective(vec![5.0]);
        lp.add_constraint(vec![1.0], Sense::Ge, 2.0);
        let res = solve_mip(&MipModel::new(lp, vec![true]), 1e-9).unwrap();
        assert_eq!(res.primal, vec![2.0]);
        assert_eq!(res.objective, 10.0);
        assert!(res.duals.is_none());
    }

    #[test]
    fn fractional_relaxation_is_branched() {
        // max x + y s.t. 2x + 2y <= 3 (LP optimum 1.5, integer optimum 1)
        let mut lp = LinearProgram::<f64>::new(2).with_objective(vec![-1.0, -1.0]);
        lp.add_constraint(vec![2.0, 2.0], Sense::Le, 3.0);
        let res = solve_mip(&MipModel::new(lp, vec![true, true]), 0.0).unwrap();
        assert!((res.objective + 1.0).abs() < 1e-9);
    }

    #[test]
    fn integer_infeasible() {
        // 2x = 1 has no integral solution
        let mut lp = LinearProgram::<f64>::new(1).with_objective(vec![1.0]);
        lp.set_bounds(0, 0.0, 5.0);
        lp.add_constraint(vec![2.0], Sense::Eq, 1.0);
        let res = solve_mip(&MipModel::new(lp, vec![true]), 0.0).unwrap();
        assert_eq!(res.status, Status::Infeasible);
    }

    #[test]
    fn indicator_enforces_row_only_when_active() {
        // vars: x in [0,10], b binary; min -x + 3b ; b = 0 => x <= 2
        let mut lp = LinearProgram::<f64>::new(2).with_objective(vec![-1.0, 3.0]);
        lp.set_bounds(0, 0.0, 10.0);
        let mut mip = MipModel::new(lp, vec![false, false]);
        mip.add_indicator(1, false, Row::new(vec![1.0, 0.0], Sense::Le, 2.0));
        let res = solve_mip(&mip, 0.0).unwrap();
        // b = 1 frees x: -10 + 3 = -7 beats -2
        assert!((res.objective + 7.0).abs() < 1e-9);
        assert!((res.primal[1] - 1.0).abs() < 1e-9);
        assert!(mip.is_feasible(&res.primal, 1e-6));
    }

    #[test]
    fn unbounded_indicator_row_is_malformed() {
        let lp = LinearProgram::<f64>::new(2);
        let mut mip = MipModel::new(lp, vec![false, false]);
        mip.add_indicator(1, true, Row::new(vec![1.0, 0.0], Sense::Le, 2.0));
        assert!(matches!(mip.linearized(), Err(SolveError::MalformedModel(_))));
    }

    #[test]
    fn node_limit_reports_incumbent_and_bound() {
        let mut lp = LinearProgram::<f64>::new(3).with_objective(vec![-5.0, -4.0, -3.0]);
        lp.add_constraint(vec![2.0, 3.0, 1.0], Sense::Le, 5.5);
        lp.add_constraint(vec![4.0, 1.0, 2.0], Sense::Le, 11.5);
        for j in 0..3 {
            lp.set_bounds(j, 0.0, 3.0);
        }
        let mip = MipModel::new(lp, vec![true; 3]);
        let opts = MipOptions {
            gap_tol: 0.0,
            node_limit: 1,
            incumbent: Some(vec![0.0, 0.0, 0.0]),
            integral_objective: false,
        };
        match solve_mip_with(&mip, &opts) {
            Err(SolveError::NodeLimitExceeded { incumbent, bound, .. }) => {
                let inc = incumbent.expect("start point is feasible");
                assert!(bound <= inc.objective + 1e-9);
            }
            other => panic!("expected node limit, got {other:?}"),
        }
    }
}
