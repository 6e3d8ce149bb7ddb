use rand::Rng;
use unify_core::{CoreError, Decision, Environment, Horizon, Observation, OptLayer, Transition, VirtualParams};

use crate::demand::{sample_demands, sample_observable};
use crate::instance::{SmcInstance, O_RANGE, SLOPE_RANGE};
use crate::models::{recourse_cost, solve_deterministic};
use crate::predict::round_half_up;

/// Largest plausible demand `ceil(λ_max + 4√λ_max)` with `λ_max = 5·10`,
/// i.e. 79.
pub fn action_scale() -> f64 {
    let lambda_max = SLOPE_RANGE.1 * O_RANGE.1;
    (lambda_max + 4.0 * lambda_max.sqrt()).ceil()
}

/// One episode's context: the observable and the demand it realizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SmcDraw {
    pub o: f64,
    pub demand: Vec<f64>,
}

impl SmcDraw {
    pub fn sample<R: Rng + ?Sized>(instance: &SmcInstance, rng: &mut R) -> Self {
        let o = sample_observable(rng);
        let demand = sample_demands(instance, o, rng);
        SmcDraw { o, demand }
    }
}

pub fn observe(o: f64) -> Observation {
    Observation::new(vec![o], vec![O_RANGE.1]).expect("observable is finite")
}

/// Decodes virtual parameters into integral predicted demands
/// `max(0, round(y·scale))`.
pub fn decode_demands(y: &[f64], scale: f64) -> Vec<f64> {
    y.iter().map(|v| round_half_up(v * scale).max(0.0)).collect()
}

/// Solves the deterministic model on the decoded demands.
#[derive(Debug, Clone)]
pub struct SmcLayer {
    pub instance: SmcInstance,
    pub scale: f64,
}

impl SmcLayer {
    pub fn new(instance: SmcInstance) -> Self {
        SmcLayer {
            instance,
            scale: action_scale(),
        }
    }
}

impl<S: ?Sized> OptLayer<S> for SmcLayer {
    fn solve(&self, _state: &S, y: &VirtualParams) -> Result<Decision, CoreError> {
        if y.len() != self.instance.n_elements {
            return Err(CoreError::DimensionMismatch {
                expected: self.instance.n_elements,
                got: y.len(),
            });
        }
        let d_hat = decode_demands(y.values(), self.scale);
        let x = solve_deterministic(&self.instance, &d_hat)?;
        Ok(Decision::feasible(x))
    }
}

/// Single-step environment: observe `o`, produce sets `x`, pay the recourse
/// cost against the realized demand.
#[derive(Debug, Clone)]
pub struct SmcEnv {
    pub instance: SmcInstance,
    current: Option<SmcDraw>,
    done: bool,
}

pub fn make_smc_env(instance: SmcInstance) -> SmcEnv {
    SmcEnv {
        instance,
        current: None,
        done: true,
    }
}

impl Environment for SmcEnv {
    type Instance = SmcDraw;
    type State = Option<SmcDraw>;

    fn reset(&mut self, draw: &SmcDraw, _seed: u64) -> Result<Observation, CoreError> {
        if draw.demand.len() != self.instance.n_elements {
            return Err(CoreError::DimensionMismatch {
                expected: self.instance.n_elements,
                got: draw.demand.len(),
            });
        }
        self.current = Some(draw.clone());
        self.done = false;
        Ok(observe(draw.o))
    }

    fn state(&self) -> &Option<SmcDraw> {
        &self.current
    }

    fn step(&mut self, z: &Decision) -> Result<Transition, CoreError> {
        if self.done {
            return Err(CoreError::EpisodeFinished);
        }
        let draw = self.current.as_ref().expect("reset before step");
        if z.values.len() != self.instance.n_sets {
            return Err(CoreError::DimensionMismatch {
                expected: self.instance.n_sets,
                got: z.values.len(),
            });
        }
        let cost = recourse_cost(&self.instance, &z.values, &draw.demand);
        self.done = true;
        Ok(Transition {
            observation: observe(draw.o),
            cost,
            done: true,
            failed: false,
        })
    }

    fn horizon(&self) -> Horizon {
        Horizon::Finite(1)
    }

    fn discount(&self) -> f64 {
        1.0
    }
}
