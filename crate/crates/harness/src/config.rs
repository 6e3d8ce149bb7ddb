use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unify_learner::TrainConfig;

use crate::error::{io_err, HarnessError};
use crate::seeds::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    EmsTuning,
    EmsConstraints,
    SmcDfl,
    SmcStochastic,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::EmsTuning,
        Experiment::EmsConstraints,
        Experiment::SmcDfl,
        Experiment::SmcStochastic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::EmsTuning => "ems-tuning",
            Experiment::EmsConstraints => "ems-constraints",
            Experiment::SmcDfl => "smc-dfl",
            Experiment::SmcStochastic => "smc-stochastic",
        }
    }

    pub fn methods(self) -> &'static [&'static str] {
        match self {
            Experiment::EmsTuning => &["tuning", "myopic", "unify-single-step", "unify-sequential"],
            Experiment::EmsConstraints => &["rl", "safety-layer", "unify-sequential"],
            Experiment::SmcDfl => &["unify", "pto"],
            Experiment::SmcStochastic => &["saa", "pto-saa", "unify"],
        }
    }

    pub fn is_ems(self) -> bool {
        matches!(self, Experiment::EmsTuning | Experiment::EmsConstraints)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmsSettings {
    /// Stages per day.
    pub stages: usize,
    /// Training (day, realization) pairs; training episodes are drawn from them.
    pub train_pairs: usize,
    pub tuning_scenarios: usize,
    pub tuning_node_limit: usize,
}

impl Default for EmsSettings {
    fn default() -> Self {
        EmsSettings {
            stages: 12,
            train_pairs: 200,
            tuning_scenarios: 3,
            tuning_node_limit: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcSettings {
    pub elements: usize,
    pub sets: usize,
    pub density: f64,
    /// Historical `(o, d)` pairs for fitting and plain SAA.
    pub train_pairs: usize,
    pub scenario_grid: Vec<usize>,
}

impl Default for SmcSettings {
    fn default() -> Self {
        SmcSettings {
            elements: unify_smc::DESK_ELEMENTS,
            sets: unify_smc::DESK_SETS,
            density: unify_smc::DESK_DENSITY,
            train_pairs: 500,
            scenario_grid: vec![1, 5, 10, 50],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub methods: Vec<String>,
    pub seed: u64,
    /// Per-method seed overrides; other methods keep their derived seeds.
    #[serde(default)]
    pub method_seeds: BTreeMap<String, u64>,
    pub out_dir: PathBuf,
    /// Sequential single-stream execution with epoch budgets only.
    #[serde(default)]
    pub deterministic: bool,
    /// Training epochs. In the tuning experiment this applies only in
    /// deterministic mode; otherwise the wall-clock budget governs.
    pub epochs: usize,
    /// Wall-clock budget per trained method. The tuning experiment defaults
    /// it to the TUNING solve time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_seconds: Option<f64>,
    pub eval_instances: usize,
    pub train: TrainConfig,
    #[serde(default)]
    pub ems: EmsSettings,
    #[serde(default)]
    pub smc: SmcSettings,
}

impl ExperimentConfig {
    /// Desk-scale defaults sized for minutes-long runs.
    pub fn preset(experiment: Experiment) -> Self {
        let mut train = TrainConfig::default();
        let (epochs, eval_instances) = match experiment {
            Experiment::EmsTuning => {
                train.batch_size = 16;
                train.learning_rate = 0.001;
                train.reward_scale = unify_ems::EMS_REWARD_SCALE;
                (2000, 30)
            }
            Experiment::EmsConstraints => {
                train.batch_size = 16;
                train.learning_rate = 0.001;
                train.reward_scale = unify_ems::EMS_REWARD_SCALE;
                (2000, 30)
            }
            Experiment::SmcDfl | Experiment::SmcStochastic => {
                train.batch_size = 32;
                train.learning_rate = 0.01;
                train.reward_scale = 10_000.0;
                (500, 30)
            }
        };
        train.epochs = epochs;
        ExperimentConfig {
            experiment,
            methods: experiment.methods().iter().map(|m| m.to_string()).collect(),
            seed: 0,
            method_seeds: BTreeMap::new(),
            out_dir: PathBuf::from("out").join(experiment.name()),
            deterministic: false,
            epochs,
            budget_seconds: None,
            eval_instances,
            train,
            ems: EmsSettings::default(),
            smc: SmcSettings::default(),
        }
    }

    /// Full-scale epoch counts, evaluation sizes and horizons.
    pub fn full_preset(experiment: Experiment) -> Self {
        let mut c = Self::preset(experiment);
        let (epochs, eval) = match experiment {
            Experiment::EmsTuning => (37, 100),
            Experiment::EmsConstraints => (19, 100),
            Experiment::SmcDfl => (10_000, 500),
            Experiment::SmcStochastic => (10_000, 500),
        };
        if experiment.is_ems() {
            c.ems.stages = 96;
            c.ems.train_pairs = 100;
        }
        c.epochs = epochs;
        c.train.epochs = epochs;
        c.eval_instances = eval;
        c.smc.scenario_grid = vec![1, 5, 10, 50, 100];
        c
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.methods.is_empty() {
            return bad("method list is empty".into());
        }
        for m in &self.methods {
            if !self.experiment.methods().contains(&m.as_str()) {
                return Err(HarnessError::UnknownMethod {
                    experiment: self.experiment.to_string(),
                    method: m.clone(),
                });
            }
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if let Some(b) = self.budget_seconds {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("budget_seconds {b}"));
            }
        }
        if self.eval_instances == 0 {
            return bad("eval_instances must be positive".into());
        }
        self.train.validate()?;
        if self.experiment.is_ems() {
            let e = &self.ems;
            if e.stages == 0 || e.train_pairs == 0 || e.tuning_scenarios == 0 || e.tuning_node_limit == 0 {
                return bad(format!("ems settings {e:?}"));
            }
        } else {
            let s = &self.smc;
            if s.elements == 0 || s.sets == 0 || s.train_pairs < 2 || !(s.density > 0.0 && s.density <= 1.0) {
                return bad(format!("smc settings {s:?}"));
            }
            if self.experiment == Experiment::SmcStochastic && (s.scenario_grid.is_empty() || s.scenario_grid.contains(&0)) {
                return bad("scenario grid needs positive counts".into());
            }
        }
        Ok(())
    }

    pub fn has(&self, method: &str) -> bool {
        self.methods.iter().any(|m| m == method)
    }

    pub fn method_seed(&self, method: &str) -> u64 {
        self.method_seeds
            .get(method)
            .copied()
            .unwrap_or_else(|| derive_seed(self.seed, &format!("{}/{method}", self.experiment)))
    }

    pub fn data_seed(&self, split: &str) -> u64 {
        derive_seed(self.seed, &format!("{}/data/{split}", self.experiment))
    }

    pub fn train_config(&self, method: &str) -> TrainConfig {
        TrainConfig {
            seed: self.method_seed(method),
            epochs: self.epochs,
            ..self.train.clone()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_toml(&text)
    }
}
