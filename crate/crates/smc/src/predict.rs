use rand::Rng;

use crate::demand::{sample_poisson, Dataset};
use crate::error::SmcError;
use crate::instance::SmcInstance;
use crate::models::{solve_deterministic, solve_saa, SaaForm};

/// Per-element least squares through the origin, `â_i = Σ o d_i / Σ o²`.
pub fn fit_rate_model(data: &Dataset) -> Result<Vec<f64>, SmcError> {
    if data.len() < 2 {
        if data.len() == 1 && data.rows[0].0 != 0.0 {
            let (o, d) = &data.rows[0];
            return Ok(d.iter().map(|v| v / o).collect());
        }
        return Err(SmcError::DegenerateData(format!("{} rows", data.len())));
    }
    let soo: f64 = data.rows.iter().map(|(o, _)| o * o).sum();
    if soo == 0.0 {
        return Err(SmcError::DegenerateData("all observables are zero".into()));
    }
    let n = data.rows[0].1.len();
    let mut slopes = vec![0.0; n];
    for (o, d) in &data.rows {
        if d.len() != n {
            return Err(SmcError::Invalid("ragged dataset".into()));
        }
        for (s, v) in slopes.iter_mut().zip(d) {
            *s += o * v;
        }
    }
    Ok(slopes.into_iter().map(|s| s / soo).collect())
}

/// Per-element absolute percentage error of the predicted rates. Rates are
/// linear in `o`, so this is `100·|â_i − a_i| / a_i` for every `o`.
pub fn rate_mape(estimate: &[f64], truth: &[f64]) -> Vec<f64> {
    estimate.iter().zip(truth).map(|(e, t)| 100.0 * (e - t).abs() / t).collect()
}

/// Nearest integer, ties rounded up.
pub fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtoMode {
    /// Plug `round(â·o)` in as the requirements.
    Point,
    /// Sample this many scenarios from `Poisson(â·o)` and solve the SAA model.
    Saa(usize),
}

pub fn predict_then_optimize<R: Rng + ?Sized>(
    instance: &SmcInstance,
    o: f64,
    slopes: &[f64],
    mode: PtoMode,
    rng: &mut R,
) -> Result<Vec<f64>, SmcError> {
    match mode {
        PtoMode::Point => {
            let d: Vec<f64> = slopes.iter().map(|a| round_half_up(a * o).max(0.0)).collect();
            solve_deterministic(instance, &d)
        }
        PtoMode::Saa(s) => {
            if s == 0 {
                return Err(SmcError::Invalid("zero scenarios".into()));
            }
            let scenarios: Vec<Vec<f64>> = (0..s)
                .map(|_| slopes.iter().map(|a| sample_poisson(a * o, rng)).collect())
                .collect();
            solve_saa(instance, &scenarios, SaaForm::Compact)
        }
    }
}

/// The observable-blind SAA baseline: `s` demand vectors drawn from the
/// historical data, ignoring their observables.
pub fn plain_saa<R: Rng + ?Sized>(instance: &SmcInstance, history: &Dataset, s: usize, rng: &mut R) -> Result<Vec<f64>, SmcError> {
    if history.is_empty() || s == 0 {
        return Err(SmcError::Invalid("plain SAA needs history and at least one scenario".into()));
    }
    let scenarios: Vec<Vec<f64>> = (0..s)
        .map(|_| history.rows[rng.random_range(0..history.len())].1.clone())
        .collect();
    solve_saa(instance, &scenarios, SaaForm::Compact)
}
