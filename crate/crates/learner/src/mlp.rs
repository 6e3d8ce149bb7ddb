use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::LearnError;
use crate::real::Real;

/// Hidden width used by both the actor mean network and the critic.
pub const HIDDEN: usize = 32;

/// Parameter tensor with a name and a row-major shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Fully connected network with tanh hidden layers and an identity output.
///
/// Parameters live in one flat vector; layer `l` stores its `out × in`
/// weight matrix row-major, followed by its `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T = f64> {
    widths: Vec<usize>,
    params: Vec<T>,
}

/// Activations recorded by [`Mlp::forward_trace`] for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    acts: Vec<Vec<T>>,
}

impl<T> Trace<T> {
    pub fn output(&self) -> &[T] {
        self.acts.last().expect("trace has an input layer")
    }
}

fn layer_size(widths: &[usize], l: usize) -> usize {
    widths[l + 1] * (widths[l] + 1)
}

impl<T: Real> Mlp<T> {
    /// All-zero network with the given layer widths (at least input and output).
    pub fn zeros(widths: &[usize]) -> Self {
        assert!(widths.len() >= 2, "an MLP needs an input and an output width");
        let n = (0..widths.len() - 1).map(|l| layer_size(widths, l)).sum();
        Mlp {
            widths: widths.to_vec(),
            params: vec![T::zero(); n],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(widths);
        let mut off = 0;
        for l in 0..widths.len() - 1 {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut net.params[off..off + fan_in * fan_out] {
                *w = T::lit(rng.random_range(-limit..=limit));
            }
            off += layer_size(widths, l);
        }
        net
    }

    /// `input → 32 → 32 → output`.
    pub fn standard<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        Self::new(&[input, HIDDEN, HIDDEN, output], rng)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn set_params(&mut self, p: &[T]) -> Result<(), LearnError> {
        if p.len() != self.params.len() {
            return Err(LearnError::DimensionMismatch {
                expected: self.params.len(),
                got: p.len(),
            });
        }
        self.params.copy_from_slice(p);
        Ok(())
    }

    fn offset(&self, l: usize) -> usize {
        (0..l).map(|i| layer_size(&self.widths, i)).sum()
    }

    /// Weight rows and biases of layer `l`.
    pub fn layer(&self, l: usize) -> (Vec<Vec<T>>, Vec<T>) {
        let (fi, fo) = (self.widths[l], self.widths[l + 1]);
        let off = self.offset(l);
        let w = (0..fo).map(|i| self.params[off + i * fi..off + (i + 1) * fi].to_vec()).collect();
        let b = self.params[off + fi * fo..off + fi * fo + fo].to_vec();
        (w, b)
    }

    /// Multiplies the last layer's weights and biases by `factor`.
    pub fn scale_output_layer(&mut self, factor: T) {
        let off = self.offset(self.num_layers() - 1);
        for p in &mut self.params[off..] {
            *p = *p * factor;
        }
    }

    /// Sets the output biases.
    pub fn set_output_bias(&mut self, bias: &[T]) {
        let l = self.num_layers() - 1;
        let off = self.offset(l) + self.widths[l] * self.widths[l + 1];
        self.params[off..off + bias.len()].copy_from_slice(bias);
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>, LearnError> {
        Ok(self.forward_trace(x)?.acts.pop().unwrap())
    }

    pub fn forward_trace(&self, x: &[T]) -> Result<Trace<T>, LearnError> {
        if x.len() != self.widths[0] {
            return Err(LearnError::DimensionMismatch {
                expected: self.widths[0],
                got: x.len(),
            });
        }
        let last = self.num_layers() - 1;
        let mut acts = Vec::with_capacity(self.widths.len());
        acts.push(x.to_vec());
        let mut off = 0;
        for l in 0..=last {
            let (fi, fo) = (self.widths[l], self.widths[l + 1]);
            let input = &acts[l];
            let w = &self.params[off..off + fi * fo];
            let b = &self.params[off + fi * fo..off + fi * fo + fo];
            let out: Vec<T> = (0..fo)
                .map(|i| {
                    let z = w[i * fi..(i + 1) * fi]
                        .iter()
                        .zip(input)
                        .fold(b[i], |acc, (&wi, &xi)| acc + wi * xi);
                    if l < last {
                        z.tanh()
                    } else {
                        z
                    }
                })
                .collect();
            acts.push(out);
            off += layer_size(&self.widths, l);
        }
        Ok(Trace { acts })
    }

    /// Adds `∂L/∂θ` to `grad` given `∂L/∂output`, and returns `∂L/∂input`.
    pub fn backward(&self, trace: &Trace<T>, grad_out: &[T], grad: &mut [T]) -> Vec<T> {
        debug_assert_eq!(grad.len(), self.params.len());
        let last = self.num_layers() - 1;
        let mut delta = grad_out.to_vec();
        let mut off = self.params.len();
        for l in (0..=last).rev() {
            let (fi, fo) = (self.widths[l], self.widths[l + 1]);
            off -= layer_size(&self.widths, l);
            if l < last {
                for (d, &a) in delta.iter_mut().zip(&trace.acts[l + 1]) {
                    *d = *d * (T::one() - a * a);
                }
            }
            let input = &trace.acts[l];
            let mut prev = vec![T::zero(); fi];
            for i in 0..fo {
                let d = delta[i];
                let row = off + i * fi;
                for j in 0..fi {
                    grad[row + j] = grad[row + j] + d * input[j];
                    prev[j] = prev[j] + d * self.params[row + j];
                }
                grad[off + fi * fo + i] = grad[off + fi * fo + i] + d;
            }
            delta = prev;
        }
        delta
    }

    pub fn tensors(&self, prefix: &str) -> Vec<NamedTensor> {
        let mut out = Vec::new();
        for l in 0..self.num_layers() {
            let (fi, fo) = (self.widths[l], self.widths[l + 1]);
            let off = self.offset(l);
            out.push(NamedTensor {
                name: format!("{prefix}.{l}.weight"),
                shape: vec![fo, fi],
                values: self.params[off..off + fi * fo].iter().map(|v| v.as_f64()).collect(),
            });
            out.push(NamedTensor {
                name: format!("{prefix}.{l}.bias"),
                shape: vec![fo],
                values: self.params[off + fi * fo..off + fi * fo + fo].iter().map(|v| v.as_f64()).collect(),
            });
        }
        out
    }

    /// Inverse of [`Mlp::tensors`].
    pub fn from_tensors(prefix: &str, tensors: &[NamedTensor]) -> Result<Self, LearnError> {
        let find = |name: String| {
            tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| LearnError::Checkpoint(format!("missing tensor {name}")))
        };
        let mut widths = Vec::new();
        let mut params = Vec::new();
        let mut l = 0;
        while let Ok(w) = find(format!("{prefix}.{l}.weight")) {
            let b = find(format!("{prefix}.{l}.bias"))?;
            if w.shape.len() != 2 || w.values.len() != w.shape[0] * w.shape[1] || b.values.len() != w.shape[0] {
                return Err(LearnError::Checkpoint(format!("bad shape for layer {l} of {prefix}")));
            }
            if l == 0 {
                widths.push(w.shape[1]);
            } else if widths[l] != w.shape[1] {
                return Err(LearnError::Checkpoint(format!("layer {l} of {prefix} does not chain")));
            }
            widths.push(w.shape[0]);
            params.extend(w.values.iter().chain(&b.values).map(|&v| T::lit(v)));
            l += 1;
        }
        if widths.len() < 2 {
            return Err(LearnError::Checkpoint(format!("no layers for {prefix}")));
        }
        Ok(Mlp { widths, params })
    }
}
