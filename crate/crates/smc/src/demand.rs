use rand::Rng;
use rand_distr::StandardNormal;

use crate::instance::{SmcInstance, O_RANGE};

/// Rates at or above this use the rounded normal approximation.
pub const NORMAL_APPROX_RATE: f64 = 30.0;

/// One Poisson draw: inversion below [`NORMAL_APPROX_RATE`], otherwise
/// `max(0, round(λ + √λ·N(0,1)))`.
pub fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    if lambda >= NORMAL_APPROX_RATE {
        let z: f64 = rng.sample(StandardNormal);
        return (lambda + lambda.sqrt() * z).round().max(0.0);
    }
    let u: f64 = rng.random();
    let mut p = (-lambda).exp();
    let mut cdf = p;
    let mut k = 0u32;
    while u > cdf && k < 1000 {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
    }
    k as f64
}

/// Independent demands `d_i ~ Poisson(a_i·o)`.
pub fn sample_demands<R: Rng + ?Sized>(instance: &SmcInstance, o: f64, rng: &mut R) -> Vec<f64> {
    instance.rates(o).into_iter().map(|l| sample_poisson(l, rng)).collect()
}

pub fn sample_observable<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(O_RANGE.0..O_RANGE.1)
}

/// Historical pairs `(o, d)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub rows: Vec<(f64, Vec<f64>)>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn generate_dataset<R: Rng + ?Sized>(instance: &SmcInstance, m: usize, rng: &mut R) -> Dataset {
    let rows = (0..m)
        .map(|_| {
            let o = sample_observable(rng);
            (o, sample_demands(instance, o, rng))
        })
        .collect();
    Dataset { rows }
}
