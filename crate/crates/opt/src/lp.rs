//! Linear program representation.

use std::fmt::{self, Write as _};

use crate::error::SolveError;
use crate::scalar::Scalar;

/// Row sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// One linear constraint `coeffs · x  (sense)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row<T> {
    pub coeffs: Vec<T>,
    pub sense: Sense,
    pub rhs: T,
}

impl<T: Scalar> Row<T> {
    pub fn new(coeffs: Vec<T>, sense: Sense, rhs: T) -> Self {
        Row { coeffs, sense, rhs }
    }

    pub fn activity(&self, x: &[T]) -> T {
        self.coeffs.iter().zip(x).map(|(&a, &v)| a * v).sum()
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[T]) -> T {
        let act = self.activity(x);
        match self.sense {
            Sense::Le => (act - self.rhs).max(T::zero()),
            Sense::Ge => (self.rhs - act).max(T::zero()),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Minimisation LP over box-bounded variables.
///
/// Unbounded sides are encoded as `-inf` / `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    num_vars: usize,
    objective: Vec<T>,
    rows: Vec<Row<T>>,
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> LinearProgram<T> {
    /// Empty program with zero objective and `x >= 0`.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![T::zero(); num_vars],
            rows: Vec::new(),
            lower: vec![T::zero(); num_vars],
            upper: vec![T::infinity(); num_vars],
        }
    }

    pub fn with_objective(mut self, objective: Vec<T>) -> Self {
        self.objective = objective;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn rows(&self) -> &[Row<T>] {
        &self.rows
    }

    pub fn lower_bounds(&self) -> &[T] {
        &self.lower
    }

    pub fn upper_bounds(&self) -> &[T] {
        &self.upper
    }

    pub fn set_objective_coeff(&mut self, var: usize, c: T) {
        self.objective[var] = c;
    }

    pub fn set_bounds(&mut self, var: usize, lower: T, upper: T) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn add_row(&mut self, row: Row<T>) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<T>, sense: Sense, rhs: T) -> usize {
        self.add_row(Row::new(coeffs, sense, rhs))
    }

    /// Adds a row given as `(variable, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, T)], sense: Sense, rhs: T) -> usize {
        let mut coeffs = vec![T::zero(); self.num_vars];
        for &(j, a) in terms {
            coeffs[j] = coeffs[j] + a;
        }
        self.add_constraint(coeffs, sense, rhs)
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for row in &self.rows {
            worst = worst.max(row.violation(x));
        }
        for j in 0..self.num_vars {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }

    pub fn validate(&self) -> Result<(), SolveError<T>> {
        let n = self.num_vars;
        if self.objective.len() != n {
            return Err(SolveError::MalformedModel(format!(
                "objective has {} coefficients, expected {n}",
                self.objective.len()
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(SolveError::MalformedModel("bound vectors do not match num_vars".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(SolveError::MalformedModel(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(SolveError::MalformedModel(format!("row {i} has non-finite data")));
            }
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == T::infinity() || u == T::neg_infinity() {
                return Err(SolveError::MalformedModel(format!("variable {j} has invalid bounds")));
            }
            if l > u {
                return Err(SolveError::MalformedModel(format!(
                    "variable {j} has lower bound {l} above upper bound {u}"
                )));
            }
            if !self.objective[j].is_finite() {
                return Err(SolveError::MalformedModel(format!("objective coefficient {j} is not finite")));
            }
        }
        Ok(())
    }

    /// Human-readable dump, one row per line.
    pub fn dump(&self) -> String {
        self.to_string()
    }
}

fn fmt_bound<T: Scalar>(v: T) -> String {
    if v == T::infinity() {
        "inf".into()
    } else if v == T::neg_infinity() {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

impl<T: Scalar> fmt::Display for LinearProgram<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[T]| {
            let mut s = String::new();
            for (k, a) in v.iter().enumerate() {
                if k > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{a}");
            }
            s
        };
        writeln!(f, "vars {}", self.num_vars)?;
        writeln!(f, "min {}", join(&self.objective))?;
        for row in &self.rows {
            writeln!(f, "row {} {} {}", join(&row.coeffs), row.sense.symbol(), row.rhs)?;
        }
        for j in 0..self.num_vars {
            writeln!(f, "bound {j} {} {}", fmt_bound(self.lower[j]), fmt_bound(self.upper[j]))?;
        }
        Ok(())
    }
}

/// Solver outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Lagrange multipliers of an LP optimum.
///
/// Sign convention: `c = Σ_i row[i]·a_i + lower - upper`, with
/// `row[i] <= 0` on `<=` rows, `row[i] >= 0` on `>=` rows and both bound
/// multipliers nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct Duals<T> {
    pub row: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub status: Status,
    pub primal: Vec<T>,
    pub objective: T,
    /// Present for LP optima only.
    pub duals: Option<Duals<T>>,
}

impl<T: Scalar> SolveResult<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub(crate) fn infeasible() -> Self {
        SolveResult {
            status: Status::Infeasible,
            primal: Vec::new(),
            objective: T::infinity(),
            duals: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_dimension_mismatch() {
        let mut lp = LinearProgram::<f64>::new(2);
        lp.add_constraint(vec![1.0], Sense::Le, 1.0);
        assert!(matches!(lp.validate(), Err(SolveError::MalformedModel(_))));
    }

    #[test]
    fn validate_rejects_crossed_bounds() {
        let mut lp = LinearProgram::<f64>::new(1);
        lp.set_bounds(0, 2.0, 1.0);
        assert!(lp.validate().is_err());
    }

    #[test]
    fn dump_has_one_line_per_row() {
        let mut lp = LinearProgram::<f64>::new(2).with_objective(vec![1.0, -1.0]);
        lp.add_constraint(vec![1.0, 1.0], Sense::Le, 4.0);
        lp.add_constraint(vec![1.0, -1.0], Sense::Ge, 0.0);
        let text = lp.dump();
        assert_eq!(text.lines().filter(|l| l.starts_with("row")).count(), 2);
        assert!(text.contains("row 1 1 <= 4"));
        assert!(text.contains("bound 1 0 inf"));
    }
}
