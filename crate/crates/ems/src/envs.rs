use unify_core::{CoreError, Decision, Environment, Horizon, Observation, ObservationScaler, OptLayer, Transition, VirtualParams};

use crate::instance::{EmsInstance, EmsRealization, DIESEL, GRID, LOAD_AMPLITUDE_RANGE, LOAD_BASE_RANGE, NUM_FLOWS, RES_PEAK_RANGE, STORAGE};
use crate::online::{delivered, simulate_day_with, solve_stage, OnlineMode, BALANCE_TOL};
use crate::safety::safety_layer_project;

/// Episode cost when an end-to-end action leaves the feasible set.
pub const INFEASIBLE_COST: f64 = 10_000.0;

/// One forecast day and its realization.
#[derive(Debug, Clone, PartialEq)]
pub struct EmsDay {
    pub instance: EmsInstance,
    pub realization: EmsRealization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmsVariant {
    /// All virtual costs at once, one step per day.
    SingleStep,
    /// One virtual cost per stage.
    Sequential,
    /// Storage, RES and diesel flows chosen directly; the grid closes the
    /// balance and infeasible actions end the episode.
    EndToEnd,
    /// End-to-end actions projected onto the feasible set.
    Safety,
}

impl EmsVariant {
    pub fn obs_dim(self, n: usize) -> usize {
        match self {
            EmsVariant::SingleStep => 2 * n,
            _ => 3 * n + 1,
        }
    }

    pub fn action_dim(self, n: usize) -> usize {
        match self {
            EmsVariant::SingleStep => n,
            EmsVariant::Sequential => 1,
            EmsVariant::EndToEnd | EmsVariant::Safety => NUM_FLOWS - 1,
        }
    }
}

/// What the optimization layer sees: the day, the stage and the charge.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmsState {
    pub day: Option<EmsDay>,
    pub k: usize,
    pub gamma: f64,
}

impl EmsState {
    fn day(&self) -> Result<&EmsDay, CoreError> {
        self.day.as_ref().ok_or_else(|| CoreError::Domain("environment not reset".into()))
    }
}

/// Frozen observation maxima from the generator's ranges.
pub fn default_scaler(variant: EmsVariant, n: usize, capacity: f64) -> ObservationScaler {
    let res_max = RES_PEAK_RANGE.1;
    let load_max = LOAD_BASE_RANGE.1 + 1.5 * LOAD_AMPLITUDE_RANGE.1;
    let mut m = Vec::with_capacity(variant.obs_dim(n));
    if variant != EmsVariant::SingleStep {
        m.push(capacity);
    }
    m.extend(std::iter::repeat_n(res_max, n));
    m.extend(std::iter::repeat_n(load_max, n));
    if variant != EmsVariant::SingleStep {
        m.extend(std::iter::repeat_n(1.0, n));
    }
    ObservationScaler::from_maxima(m)
}

fn dims(expected: usize, got: usize) -> CoreError {
    CoreError::DimensionMismatch { expected, got }
}

/// Virtual storage costs `c0 = y·scale` for a whole day: simulates the
/// online heuristic and returns every stage's flows, stage-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleLayer {
    pub scale: f64,
    pub mode: OnlineMode,
}

/// Action scale for virtual costs: the largest purchase price.
pub fn virtual_cost_scale(instance: &EmsInstance) -> f64 {
    instance.max_buy_price()
}

impl ScheduleLayer {
    pub fn new(scale: f64) -> Self {
        ScheduleLayer {
            scale,
            mode: OnlineMode::PerStage,
        }
    }

    pub fn schedule(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| v * self.scale).collect()
    }
}

impl OptLayer<EmsState> for ScheduleLayer {
    fn solve(&self, state: &EmsState, y: &VirtualParams) -> Result<Decision, CoreError> {
        let day = state.day()?;
        if y.len() != day.instance.n() {
            return Err(dims(day.instance.n(), y.len()));
        }
        let out = simulate_day_with(&day.instance, &day.realization, &self.schedule(y.values()), self.mode)?;
        Ok(Decision::feasible(out.flows()))
    }
}

/// The virtual cost `c0 = y·scale` of the current stage only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageCostLayer {
    pub scale: f64,
}

impl OptLayer<EmsState> for StageCostLayer {
    fn solve(&self, state: &EmsState, y: &VirtualParams) -> Result<Decision, CoreError> {
        if y.len() != 1 {
            return Err(dims(1, y.len()));
        }
        let day = state.day()?;
        let k = state.k;
        let d = solve_stage(&day.instance, k, state.gamma, y.0[0] * self.scale, day.realization.res[k], day.realization.load[k])?;
        Ok(Decision::feasible(d.flows.to_vec()))
    }
}

/// Maps `a ∈ [−1,1]³` to storage `a0·P`, RES `(a1+1)/2·R̃` and diesel
/// `(a2+1)/2·D`, then closes the balance with the grid.
pub fn decode_flows(instance: &EmsInstance, res: f64, load: f64, a: &[f64]) -> [f64; NUM_FLOWS] {
    let c = |v: f64| v.clamp(-1.0, 1.0);
    let x0 = c(a[0]) * instance.storage_power;
    let x1 = 0.5 * (c(a[1]) + 1.0) * res;
    let x3 = 0.5 * (c(a[2]) + 1.0) * instance.diesel_max;
    let x2 = load + x0 - x1 - x3;
    [x0, x1, x2, x3]
}

/// Direct flows; the decision is flagged infeasible when the battery window
/// or the grid sale cap is violated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowLayer;

fn flows_feasible(instance: &EmsInstance, gamma: f64, flows: &[f64]) -> bool {
    let (lo, hi) = instance.storage_bounds(gamma);
    flows[STORAGE] >= lo && flows[STORAGE] <= hi && flows[GRID] >= -instance.sell_cap()
}

impl OptLayer<EmsState> for FlowLayer {
    fn solve(&self, state: &EmsState, y: &VirtualParams) -> Result<Decision, CoreError> {
        if y.len() != NUM_FLOWS - 1 {
            return Err(dims(NUM_FLOWS - 1, y.len()));
        }
        let day = state.day()?;
        let k = state.k;
        let flows = decode_flows(&day.instance, day.realization.res[k], day.realization.load[k], y.values());
        let ok = flows_feasible(&day.instance, state.gamma, &flows);
        Ok(Decision {
            values: flows.to_vec(),
            feasible: ok,
        })
    }
}

/// Direct flows projected onto the feasible set in Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SafetyLayer;

impl OptLayer<EmsState> for SafetyLayer {
    fn solve(&self, state: &EmsState, y: &VirtualParams) -> Result<Decision, CoreError> {
        if y.len() != NUM_FLOWS - 1 {
            return Err(dims(NUM_FLOWS - 1, y.len()));
        }
        let day = state.day()?;
        let k = state.k;
        let (res, load) = (day.realization.res[k], day.realization.load[k]);
        let proposed = decode_flows(&day.instance, res, load, y.values());
        let d = safety_layer_project(&day.instance, state.gamma, &proposed, res, load)?;
        Ok(Decision::feasible(d.flows.to_vec()))
    }
}

/// The EMS as a sequential decision process; `variant` fixes the observation,
/// the step granularity and how costs are charged.
#[derive(Debug, Clone)]
pub struct EmsEnv {
    pub variant: EmsVariant,
    pub n: usize,
    pub scaler: ObservationScaler,
    state: EmsState,
    accumulated: f64,
    done: bool,
}

pub fn make_env(variant: EmsVariant, n: usize, capacity: f64) -> EmsEnv {
    EmsEnv {
        variant,
        n,
        scaler: default_scaler(variant, n, capacity),
        state: EmsState::default(),
        accumulated: 0.0,
        done: true,
    }
}

impl EmsEnv {
    fn observe(&self) -> Result<Observation, CoreError> {
        let day = self.state.day()?;
        let inst = &day.instance;
        let mut v = Vec::with_capacity(self.variant.obs_dim(self.n));
        if self.variant != EmsVariant::SingleStep {
            v.push(self.state.gamma);
        }
        v.extend_from_slice(&inst.res_forecast);
        v.extend_from_slice(&inst.load_forecast);
        if self.variant != EmsVariant::SingleStep {
            v.extend((0..self.n).map(|k| if k == self.state.k { 1.0 } else { 0.0 }));
        }
        self.scaler.observe(v)
    }

    fn check_stage(&self, k: usize, gamma: f64, flows: &[f64]) -> Result<f64, CoreError> {
        let day = self.state.day()?;
        let (inst, real) = (&day.instance, &day.realization);
        let (lo, hi) = inst.storage_bounds(gamma);
        let x0 = flows[STORAGE];
        let tol = 1e-9;
        let balanced = (delivered(flows) - real.load[k]).abs() <= BALANCE_TOL;
        let bounded = x0 >= lo - tol
            && x0 <= hi + tol
            && flows[1] >= -tol
            && flows[1] <= real.res[k] + tol
            && flows[DIESEL] >= -tol
            && flows[DIESEL] <= inst.diesel_max + tol;
        if !(balanced && bounded) {
            return Err(CoreError::Domain(format!("stage {k}: dispatch {flows:?} is infeasible")));
        }
        Ok(inst.stage_cost(k, flows))
    }

    /// Advances the battery; the storage flow is snapped onto its interval.
    fn advance(&mut self, x0: f64) {
        let inst = &self.state.day.as_ref().expect("reset").instance;
        let (lo, hi) = inst.storage_bounds(self.state.gamma);
        self.state.gamma += inst.efficiency * x0.clamp(lo, hi);
        self.state.k += 1;
    }
}

impl Environment for EmsEnv {
    type Instance = EmsDay;
    type State = EmsState;

    fn reset(&mut self, day: &EmsDay, _seed: u64) -> Result<Observation, CoreError> {
        if day.instance.n() != self.n || day.realization.n() != self.n {
            return Err(dims(self.n, day.instance.n()));
        }
        day.instance.check()?;
        self.state = EmsState {
            gamma: day.instance.initial_charge,
            day: Some(day.clone()),
            k: 0,
        };
        self.accumulated = 0.0;
        self.done = false;
        self.observe()
    }

    fn state(&self) -> &EmsState {
        &self.state
    }

    fn step(&mut self, decision: &Decision) -> Result<Transition, CoreError> {
        if self.done {
            return Err(CoreError::EpisodeFinished);
        }
        match self.variant {
            EmsVariant::SingleStep => {
                if decision.values.len() != NUM_FLOWS * self.n {
                    return Err(dims(NUM_FLOWS * self.n, decision.values.len()));
                }
                let mut cost = 0.0;
                for (k, flows) in decision.values.chunks(NUM_FLOWS).enumerate() {
                    cost += self.check_stage(k, self.state.gamma, flows)?;
                    self.advance(flows[STORAGE]);
                }
                self.done = true;
                Ok(Transition {
                    observation: self.observe()?,
                    cost,
                    done: true,
                    failed: false,
                })
            }
            EmsVariant::Sequential | EmsVariant::EndToEnd | EmsVariant::Safety => {
                if decision.values.len() != NUM_FLOWS {
                    return Err(dims(NUM_FLOWS, decision.values.len()));
                }
                let k = self.state.k;
                let stage = if decision.feasible {
                    self.check_stage(k, self.state.gamma, &decision.values).ok()
                } else {
                    None
                };
                let Some(stage_cost) = stage else {
                    if self.variant == EmsVariant::Sequential {
                        return Err(CoreError::OptLayerInfeasible(format!("stage {k}")));
                    }
                    self.done = true;
                    return Ok(Transition {
                        observation: self.observe()?,
                        cost: INFEASIBLE_COST,
                        done: true,
                        failed: true,
                    });
                };
                self.advance(decision.values[STORAGE]);
                let done = self.state.k == self.n;
                self.done = done;
                let cost = if self.variant == EmsVariant::Sequential {
                    stage_cost
                } else {
                    self.accumulated += stage_cost;
                    if done {
                        self.accumulated
                    } else {
                        0.0
                    }
                };
                Ok(Transition {
                    observation: self.observe()?,
                    cost,
                    done,
                    failed: false,
                })
            }
        }
    }

    fn horizon(&self) -> Horizon {
        match self.variant {
            EmsVariant::SingleStep => Horizon::Finite(1),
            _ => Horizon::Finite(self.n),
        }
    }

    fn discount(&self) -> f64 {
        1.0
    }
}
