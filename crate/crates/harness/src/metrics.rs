use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// Trailing window used when asserting trends on training curves.
pub const SMOOTHING_WINDOW: usize = 5;

/// `(cost − oracle) / oracle`.
pub fn optimality_gap(cost: f64, oracle_cost: f64) -> Result<f64, HarnessError> {
    if !(oracle_cost > 0.0) {
        return Err(HarnessError::ZeroOracle(oracle_cost));
    }
    Ok((cost - oracle_cost) / oracle_cost)
}

pub fn gaps(costs: &[f64], oracles: &[f64]) -> Result<Vec<f64>, HarnessError> {
    costs.iter().zip(oracles).map(|(&c, &o)| optimality_gap(c, o)).collect()
}

/// Mean and sample standard deviation; the deviation of fewer than two
/// values is zero.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean of the last `window` values up to each position.
pub fn trailing_mean(values: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            values[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    /// One training epoch, measured on the episodes of its batch.
    Epoch,
    /// Test-set evaluation before any training.
    Untrained,
    /// Test-set evaluation after training.
    Trained,
    /// Test-set evaluation of a method without training.
    Baseline,
    /// The perfect-information oracle itself.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub method: String,
    pub kind: RecordKind,
    pub epoch: Option<usize>,
    pub scenarios: Option<usize>,
    /// Wall-clock seconds spent by the method up to this record.
    pub seconds: f64,
    pub episodes: usize,
    pub gap_mean: f64,
    pub gap_std: f64,
    pub failures: Option<usize>,
    pub cost_mean: f64,
    pub cost_std: f64,
    pub oracle_mean: f64,
    /// Per-element absolute percentage error of a fitted model.
    #[serde(default)]
    pub mape: Vec<f64>,
    /// Mean solve time over the mean UNIFY inference time.
    pub runtime_ratio: Option<f64>,
}

impl MetricsRecord {
    /// Record over paired method and oracle costs.
    pub fn from_costs(method: &str, kind: RecordKind, costs: &[f64], oracles: &[f64]) -> Result<Self, HarnessError> {
        if costs.len() != oracles.len() || costs.is_empty() {
            return Err(HarnessError::Config(format!("{} costs for {} oracle values", costs.len(), oracles.len())));
        }
        let g = gaps(costs, oracles)?;
        let (gap_mean, gap_std) = mean_std(&g);
        let (cost_mean, cost_std) = mean_std(costs);
        let (oracle_mean, _) = mean_std(oracles);
        Ok(MetricsRecord {
            method: method.to_string(),
            kind,
            epoch: None,
            scenarios: None,
            seconds: 0.0,
            episodes: costs.len(),
            gap_mean,
            gap_std,
            failures: None,
            cost_mean,
            cost_std,
            oracle_mean,
            mape: Vec::new(),
            runtime_ratio: None,
        })
    }

    pub fn with_epoch(mut self, epoch: usize) -> Self {
        self.epoch = Some(epoch);
        self
    }

    pub fn with_scenarios(mut self, s: usize) -> Self {
        self.scenarios = Some(s);
        self
    }

    pub fn with_seconds(mut self, s: f64) -> Self {
        self.seconds = s;
        self
    }

    pub fn with_failures(mut self, f: usize) -> Self {
        self.failures = Some(f);
        self
    }
}

/// Everything one pipeline produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub experiment: crate::config::Experiment,
    pub records: Vec<MetricsRecord>,
    /// Wall-clock budget the trained methods ran under, if any.
    pub budget_seconds: Option<f64>,
}

impl ExperimentOutput {
    pub fn find<'a>(&'a self, method: &'a str, kind: RecordKind) -> impl Iterator<Item = &'a MetricsRecord> + 'a {
        self.records.iter().filter(move |r| r.method == method && r.kind == kind)
    }

    /// The per-epoch records of `method`, in order.
    pub fn curve<'a>(&'a self, method: &'a str) -> Vec<&'a MetricsRecord> {
        self.find(method, RecordKind::Epoch).collect()
    }
}
