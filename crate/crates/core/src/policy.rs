//! The decomposed policy `π(x, θ) = g(x, h(x, θ))`.

use crate::error::CoreError;
use crate::observation::Observation;

/// Output of the learned model `h`: inputs of the optimization layer that
/// need not exist in the original problem.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualParams(pub Vec<f64>);

impl VirtualParams {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Decision vector `z` together with the producing layer's feasibility claim.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub values: Vec<f64>,
    pub feasible: bool,
}

impl Decision {
    pub fn feasible(values: Vec<f64>) -> Self {
        Decision { values, feasible: true }
    }

    pub fn unchecked(values: Vec<f64>) -> Self {
        Decision { values, feasible: false }
    }
}

/// The learned model `h(x, θ)`. Takes `&mut self` so stochastic samplers can
/// advance their random stream.
pub trait Model {
    fn output(&mut self, x: &Observation) -> VirtualParams;
}

impl<F: FnMut(&Observation) -> VirtualParams> Model for F {
    fn output(&mut self, x: &Observation) -> VirtualParams {
        self(x)
    }
}

/// The optimization layer `g(x, y)`. `S` is the full environment state the
/// layer may read (it can hold information the model never sees).
pub trait OptLayer<S: ?Sized> {
    fn solve(&self, state: &S, y: &VirtualParams) -> Result<Decision, CoreError>;
}

impl<S: ?Sized, G: OptLayer<S> + ?Sized> OptLayer<S> for &G {
    fn solve(&self, state: &S, y: &VirtualParams) -> Result<Decision, CoreError> {
        (**self).solve(state, y)
    }
}

/// `C̃` is the whole space and `f̃ = ‖y − z‖₂`, so `g(x, y) = y`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityLayer;

impl<S: ?Sized> OptLayer<S> for IdentityLayer {
    fn solve(&self, _state: &S, y: &VirtualParams) -> Result<Decision, CoreError> {
        Ok(Decision::feasible(y.0.clone()))
    }
}

#[derive(Debug, Clone)]
pub struct DecomposedPolicy<M, G> {
    pub model: M,
    pub opt_layer: G,
}

impl<M: Model, G> DecomposedPolicy<M, G> {
    pub fn new(model: M, opt_layer: G) -> Self {
        DecomposedPolicy { model, opt_layer }
    }

    /// `y = h(x, θ)`, then `z = g(x, y)`.
    pub fn act<S: ?Sized>(&mut self, x: &Observation, state: &S) -> Result<(VirtualParams, Decision), CoreError>
    where
        G: OptLayer<S>,
    {
        let y = self.model.output(x);
        let z = self.opt_layer.solve(state, &y)?;
        Ok((y, z))
    }
}
