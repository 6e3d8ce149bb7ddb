use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::LearnError;
use crate::mlp::Mlp;
use crate::real::Real;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Diagonal Gaussian over actions: mean from an MLP, state-independent
/// learnable log standard deviation.
///
/// The flat parameter vector is the mean network's parameters followed by
/// `log_std`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy<T = f64> {
    pub mean: Mlp<T>,
    pub log_std: Vec<T>,
}

impl<T: Real> GaussianPolicy<T> {
    /// `log_std` starts at 0, i.e. unit standard deviation.
    pub fn new(mean: Mlp<T>) -> Self {
        let d = mean.output_dim();
        GaussianPolicy {
            mean,
            log_std: vec![T::zero(); d],
        }
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn num_params(&self) -> usize {
        self.mean.num_params() + self.log_std.len()
    }

    pub fn params(&self) -> Vec<T> {
        let mut p = self.mean.params().to_vec();
        p.extend_from_slice(&self.log_std);
        p
    }

    pub fn set_params(&mut self, p: &[T]) -> Result<(), LearnError> {
        if p.len() != self.num_params() {
            return Err(LearnError::DimensionMismatch {
                expected: self.num_params(),
                got: p.len(),
            });
        }
        let k = self.mean.num_params();
        self.mean.set_params(&p[..k])?;
        self.log_std.copy_from_slice(&p[k..]);
        Ok(())
    }

    pub fn std(&self) -> Vec<T> {
        self.log_std.iter().map(|s| s.exp()).collect()
    }

    pub fn mean_action(&self, x: &[T]) -> Result<Vec<T>, LearnError> {
        self.mean.forward(x)
    }

    /// `action = mean(x) + std ⊙ ε` with `ε ~ N(0, I)`, and its log-density.
    pub fn sample_action<R: Rng + ?Sized>(&self, x: &[T], rng: &mut R) -> Result<(Vec<T>, T), LearnError> {
        let eps: Vec<T> = (0..self.action_dim())
            .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        self.action_from_noise(x, &eps)
    }

    /// Deterministic counterpart of [`GaussianPolicy::sample_action`] for a given draw `ε`.
    pub fn action_from_noise(&self, x: &[T], eps: &[T]) -> Result<(Vec<T>, T), LearnError> {
        let mu = self.mean.forward(x)?;
        let a: Vec<T> = mu
            .iter()
            .zip(&self.log_std)
            .zip(eps)
            .map(|((&m, &ls), &e)| m + ls.exp() * e)
            .collect();
        let lp = self.log_prob_at(&mu, &a);
        Ok((a, lp))
    }

    pub fn log_prob(&self, x: &[T], action: &[T]) -> Result<T, LearnError> {
        if action.len() != self.action_dim() {
            return Err(LearnError::DimensionMismatch {
                expected: self.action_dim(),
                got: action.len(),
            });
        }
        let mu = self.mean.forward(x)?;
        Ok(self.log_prob_at(&mu, action))
    }

    fn log_prob_at(&self, mu: &[T], a: &[T]) -> T {
        let half = T::lit(0.5);
        mu.iter()
            .zip(a)
            .zip(&self.log_std)
            .map(|((&m, &ai), &ls)| {
                let z = (ai - m) / ls.exp();
                -half * z * z - ls - half * T::lit(LN_2PI)
            })
            .sum()
    }

    /// Adds `weight · ∇θ log π(action | x)` to `grad`.
    pub fn accumulate_log_prob_grad(&self, x: &[T], action: &[T], weight: T, grad: &mut [T]) -> Result<(), LearnError> {
        if grad.len() != self.num_params() {
            return Err(LearnError::DimensionMismatch {
                expected: self.num_params(),
                got: grad.len(),
            });
        }
        let trace = self.mean.forward_trace(x)?;
        let mu = trace.output();
        let k = self.mean.num_params();
        let mut d_mu = Vec::with_capacity(mu.len());
        for (i, ((&m, &a), &ls)) in mu.iter().zip(action).zip(&self.log_std).enumerate() {
            let var = (ls + ls).exp();
            let diff = a - m;
            d_mu.push(weight * diff / var);
            grad[k + i] = grad[k + i] + weight * (diff * diff / var - T::one());
        }
        self.mean.backward(&trace, &d_mu, &mut grad[..k]);
        Ok(())
    }
}
