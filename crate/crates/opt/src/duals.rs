//! Multiplier extraction and KKT residuals for LP optima.

use crate::error::SolveError;
use crate::lp::{LinearProgram, Sense, SolveResult, Status};
use crate::scalar::Scalar;

/// Row multipliers plus (lower, upper) bound multipliers.
pub type Multipliers<T> = (Vec<T>, (Vec<T>, Vec<T>));

pub fn extract_duals<T: Scalar>(
    result: &SolveResult<T>,
    lp: &LinearProgram<T>,
) -> Result<Multipliers<T>, SolveError<T>> {
    if result.status != Status::Optimal {
        return Err(SolveError::DualsUnavailable);
    }
    let duals = result.duals.as_ref().ok_or(SolveError::DualsUnavailable)?;
    if duals.row.len() != lp.num_rows() || duals.lower.len() != lp.num_vars() {
        return Err(SolveError::MalformedModel("result does not belong to this program".into()));
    }
    Ok((duals.row.clone(), (duals.lower.clone(), duals.upper.clone())))
}

/// Worst-case violations of the KKT system at an LP optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals<T> {
    pub primal: T,
    /// `max_j |c_j - Σ_i y_i a_ij - l_j + u_j|`.
    pub stationarity: T,
    /// Wrong-signed multipliers.
    pub dual_sign: T,
    /// `max |multiplier · slack|` over rows and bounds.
    pub complementarity: T,
    /// `primal objective - dual objective`.
    pub duality_gap: T,
}

impl<T: Scalar> KktResiduals<T> {
    pub fn max(&self) -> T {
        self.primal
            .max(self.stationarity)
            .max(self.dual_sign)
            .max(self.complementarity)
            .max(self.duality_gap.abs())
    }
}

pub fn kkt_residuals<T: Scalar>(
    lp: &LinearProgram<T>,
    result: &SolveResult<T>,
) -> Result<KktResiduals<T>, SolveError<T>> {
    let (y, (zl, zu)) = extract_duals(result, lp)?;
    let x = &result.primal;
    let n = lp.num_vars();
    let mut stationarity = T::zero();
    for j in 0..n {
        let mut r = lp.objective()[j] - zl[j] + zu[j];
        for (i, row) in lp.rows().iter().enumerate() {
            r = r - y[i] * row.coeffs[j];
        }
        stationarity = stationarity.max(r.abs());
    }
    let mut dual_sign = T::zero();
    let mut complementarity = T::zero();
    let mut dual_obj = T::zero();
    for (i, row) in lp.rows().iter().enumerate() {
        match row.sense {
            Sense::Le => dual_sign = dual_sign.max(y[i]),
            Sense::Ge => dual_sign = dual_sign.max(-y[i]),
            Sense::Eq => {}
        }
        let slack = row.activity(x) - row.rhs;
        complementarity = complementarity.max((y[i] * slack).abs());
        dual_obj = dual_obj + y[i] * row.rhs;
    }
    for j in 0..n {
        dual_sign = dual_sign.max(-zl[j]).max(-zu[j]);
        let (l, u) = (lp.lower_bounds()[j], lp.upper_bounds()[j]);
        if l.is_finite() {
            complementarity = complementarity.max((zl[j] * (x[j] - l)).abs());
            dual_obj = dual_obj + zl[j] * l;
        } else {
            dual_sign = dual_sign.max(zl[j].abs());
        }
        if u.is_finite() {
            complementarity = complementarity.max((zu[j] * (u - x[j])).abs());
            dual_obj = dual_obj - zu[j] * u;
        } else {
            dual_sign = dual_sign.max(zu[j].abs());
        }
    }
    Ok(KktResiduals {
        primal: lp.max_violation(x),
        stationarity,
        dual_sign,
        complementarity,
        duality_gap: result.objective - dual_obj,
    })
}
