//! Brute-force reference computations for tests.
//!
//! Nothing here calls into the solver; the functions only read model data
//! and enumerate.

use unify_opt::{LinearProgram, MipModel, Sense};

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when the matrix is (numerically) singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Minimum of an LP whose variables all have finite bounds, found by
/// enumerating every vertex. `None` means infeasible.
pub fn lp_vertex_enumeration(lp: &LinearProgram<f64>) -> Option<(f64, Vec<f64>)> {
    let n = lp.num_vars();
    let tol = 1e-7;
    // Hyperplanes: rows, then lower and upper bounds.
    let mut planes: Vec<(Vec<f64>, f64)> = lp.rows().iter().map(|r| (r.coeffs.clone(), r.rhs)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        assert!(lp.lower_bounds()[j].is_finite() && lp.upper_bounds()[j].is_finite());
        planes.push((e.clone(), lp.lower_bounds()[j]));
        planes.push((e, lp.upper_bounds()[j]));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    combinations(planes.len(), n, &mut |idx| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        let Some(x) = solve_dense(a, b) else { return };
        if lp.max_violation(&x) > tol {
            return;
        }
        let obj = lp.objective_value(&x);
        if best.as_ref().is_none_or(|(o, _)| obj < *o - 1e-12) {
            best = Some((obj, x));
        }
    });
    if n == 0 {
        return (lp.max_violation(&[]) <= tol).then(|| (0.0, vec![]));
    }
    best
}

/// Visits every integer point of the box `lower..=upper`.
pub fn for_each_integer_point(lower: &[i64], upper: &[i64], mut f: impl FnMut(&[f64])) {
    let n = lower.len();
    let mut cur: Vec<i64> = lower.to_vec();
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return;
    }
    loop {
        let x: Vec<f64> = cur.iter().map(|&v| v as f64).collect();
        f(&x);
        let mut k = 0;
        loop {
            if k == n {
                return;
            }
            if cur[k] < upper[k] {
                cur[k] += 1;
                break;
            }
            cur[k] = lower[k];
            k += 1;
        }
    }
}

/// Exhaustive optimum of a pure-integer model with finite integral bounds.
pub fn mip_enumeration(mip: &MipModel<f64>) -> Option<(f64, Vec<f64>)> {
    let lp = &mip.base;
    assert!(mip.integrality.iter().all(|&b| b), "enumeration needs a pure integer model");
    let lower: Vec<i64> = lp.lower_bounds().iter().map(|v| v.ceil() as i64).collect();
    let upper: Vec<i64> = lp.upper_bounds().iter().map(|v| v.floor() as i64).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for_each_integer_point(&lower, &upper, |x| {
        if lp.max_violation(x) > 1e-9 {
            return;
        }
        let ind_ok = mip.indicators.iter().all(|ind| {
            let on = if ind.active { 1.0 } else { 0.0 };
            x[ind.binary] != on || ind.row.violation(x) <= 1e-9
        });
        if !ind_ok {
            return;
        }
        let obj = lp.objective_value(x);
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, x.to_vec()));
        }
    });
    best
}

/// Euclidean projection of `y` onto `{z : Σ z = target, lo <= z <= hi}` by
/// enumerating which coordinates sit on a bound. Infinite bounds are allowed.
pub fn projection_active_set(y: &[f64], lo: &[f64], hi: &[f64], target: f64) -> Option<Vec<f64>> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        // 0 free, 1 at lower, 2 at upper
        let mut c = code;
        let mut status = vec![0u8; n];
        for s in status.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        if status.iter().enumerate().any(|(g, &s)| (s == 1 && !lo[g].is_finite()) || (s == 2 && !hi[g].is_finite())) {
            continue;
        }
        let fixed: f64 = (0..n)
            .map(|g| match status[g] {
                1 => lo[g],
                2 => hi[g],
                _ => 0.0,
            })
            .sum();
        let free: Vec<usize> = (0..n).filter(|&g| status[g] == 0).collect();
        let z: Vec<f64> = if free.is_empty() {
            if (fixed - target).abs() > 1e-9 {
                continue;
            }
            (0..n).map(|g| if status[g] == 1 { lo[g] } else { hi[g] }).collect()
        } else {
            let tau = (target - fixed - free.iter().map(|&g| y[g]).sum::<f64>()) / free.len() as f64;
            (0..n)
                .map(|g| match status[g] {
                    1 => lo[g],
                    2 => hi[g],
                    _ => y[g] + tau,
                })
                .collect()
        };
        if (0..n).any(|g| z[g] < lo[g] - 1e-12 || z[g] > hi[g] + 1e-12) {
            continue;
        }
        let dist: f64 = z.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, z));
        }
    }
    best.map(|(_, z)| z)
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_difference(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Straight-line MLP forward pass with tanh hidden layers and an identity
/// output. `layers[l] = (weights[out][in], bias[out])`.
pub fn mlp_reference(layers: &[(Vec<Vec<f64>>, Vec<f64>)], input: &[f64]) -> Vec<f64> {
    let mut h = input.to_vec();
    for (l, (w, b)) in layers.iter().enumerate() {
        let mut out = Vec::with_capacity(b.len());
        for (row, &bias) in w.iter().zip(b) {
            let mut s = bias;
            for (a, v) in row.iter().zip(&h) {
                s += a * v;
            }
            out.push(if l + 1 < layers.len() { s.tanh() } else { s });
        }
        h = out;
    }
    h
}

/// Residual check of a row-sense relation, used by replay tests.
pub fn satisfies(activity: f64, sense: Sense, rhs: f64, tol: f64) -> bool {
    match sense {
        Sense::Le => activity <= rhs + tol,
        Sense::Ge => activity >= rhs - tol,
        Sense::Eq => (activity - rhs).abs() <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_enumeration_on_triangle() {
        let mut lp = LinearProgram::<f64>::new(2).with_objective(vec![-1.0, -1.0]);
        lp.set_bounds(0, 0.0, 5.0);
        lp.set_bounds(1, 0.0, 5.0);
        lp.add_constraint(vec![1.0, 1.0], Sense::Le, 1.0);
        let (obj, _) = lp_vertex_enumeration(&lp).unwrap();
        assert!((obj + 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_symmetric_case() {
        let z = projection_active_set(&[2.0, 2.0], &[0.0, 0.0], &[3.0, 3.0], 3.0).unwrap();
        assert!((z[0] - 1.5).abs() < 1e-12 && (z[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn integer_box_visits_all_points() {
        let mut count = 0;
        for_each_integer_point(&[0, -1], &[2, 1], |_| count += 1);
        assert_eq!(count, 9);
    }
}
