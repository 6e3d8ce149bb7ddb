use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::EmsError;

/// Flow indices: storage, RES, grid, diesel.
pub const STORAGE: usize = 0;
pub const RES: usize = 1;
pub const GRID: usize = 2;
pub const DIESEL: usize = 3;
pub const NUM_FLOWS: usize = 4;

pub const PRICE_OFF_PEAK: f64 = 0.08;
pub const PRICE_MID: f64 = 0.15;
pub const PRICE_PEAK: f64 = 0.25;
pub const SELL_RATIO: f64 = 0.5;
pub const DIESEL_COST: f64 = 0.20;
pub const DIESEL_MAX: f64 = 100.0;
pub const STORAGE_POWER: f64 = 100.0;
pub const CAPACITY: f64 = 200.0;
pub const EFFICIENCY: f64 = 0.9;
pub const INITIAL_CHARGE: f64 = 100.0;
pub const LOAD_BASE_RANGE: (f64, f64) = (150.0, 250.0);
pub const LOAD_AMPLITUDE_RANGE: (f64, f64) = (50.0, 100.0);
pub const RES_PEAK_RANGE: (f64, f64) = (150.0, 350.0);
/// Relative half-width of the 95% interval of the forecast error.
pub const NOISE_CI: f64 = 0.10;

/// One day of forecasts, prices and battery data. Energy is measured per
/// stage, prices per unit of energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmsInstance {
    pub res_forecast: Vec<f64>,
    pub load_forecast: Vec<f64>,
    pub buy_price: Vec<f64>,
    pub sell_price: Vec<f64>,
    pub diesel_cost: f64,
    pub diesel_max: f64,
    /// Largest charge or discharge per stage.
    pub storage_power: f64,
    pub capacity: f64,
    pub efficiency: f64,
    pub initial_charge: f64,
}

impl EmsInstance {
    pub fn n(&self) -> usize {
        self.load_forecast.len()
    }

    pub fn check(&self) -> Result<(), EmsError> {
        let n = self.n();
        let bad = |m: &str| Err(EmsError::InvalidInstance(m.to_string()));
        if n == 0 {
            return bad("no stages");
        }
        if [self.res_forecast.len(), self.buy_price.len(), self.sell_price.len()] != [n; 3] {
            return bad("profile lengths differ");
        }
        let all_finite = self
            .res_forecast
            .iter()
            .chain(&self.load_forecast)
            .chain(&self.buy_price)
            .chain(&self.sell_price)
            .chain([&self.diesel_cost, &self.diesel_max, &self.storage_power, &self.capacity, &self.initial_charge])
            .all(|v| v.is_finite());
        if !all_finite {
            return bad("non-finite value");
        }
        if self.res_forecast.iter().chain(&self.load_forecast).any(|&v| v < 0.0) {
            return bad("negative forecast");
        }
        if self.buy_price.iter().zip(&self.sell_price).any(|(b, s)| b < s) {
            return bad("buy price below sell price");
        }
        if self.diesel_max < 0.0 || self.storage_power < 0.0 || self.capacity <= 0.0 {
            return bad("negative bound");
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return bad("efficiency outside (0, 1]");
        }
        if !(0.0..=self.capacity).contains(&self.initial_charge) {
            return bad("initial charge outside [0, capacity]");
        }
        Ok(())
    }

    /// Storage flow interval at charge `gamma`: the power limit intersected
    /// with the battery window `[−γ/η, (Γ−γ)/η]`.
    pub fn storage_bounds(&self, gamma: f64) -> (f64, f64) {
        let lo = (-self.storage_power).max(-gamma / self.efficiency);
        let hi = self.storage_power.min((self.capacity - gamma) / self.efficiency);
        (lo.min(0.0), hi.max(0.0))
    }

    /// Cap on grid sales. Supply can never exceed it, so it is slack in every
    /// dispatch and only bounds the end-to-end actions.
    pub fn sell_cap(&self) -> f64 {
        let res_max = self.res_forecast.iter().copied().fold(0.0, f64::max);
        2.0 * res_max + self.storage_power + self.diesel_max + 1.0
    }

    pub fn max_buy_price(&self) -> f64 {
        self.buy_price.iter().copied().fold(0.0, f64::max)
    }

    /// Real cost of one stage's flows `[x0, x1, x2, x3]`.
    pub fn stage_cost(&self, k: usize, flows: &[f64]) -> f64 {
        let g = flows[GRID];
        self.buy_price[k] * g.max(0.0) - self.sell_price[k] * (-g).max(0.0) + self.diesel_cost * flows[DIESEL]
    }
}

/// Realized RES and load for every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmsRealization {
    pub res: Vec<f64>,
    pub load: Vec<f64>,
}

impl EmsRealization {
    /// The forecasts themselves.
    pub fn exact(instance: &EmsInstance) -> Self {
        EmsRealization {
            res: instance.res_forecast.clone(),
            load: instance.load_forecast.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.load.len()
    }
}

/// Stage hour in `[0, 24)` at the middle of stage `k`.
fn hour(k: usize, n: usize) -> f64 {
    24.0 * (k as f64 + 0.5) / n as f64
}

pub fn price_at(h: f64) -> f64 {
    if !(7.0..22.0).contains(&h) {
        PRICE_OFF_PEAK
    } else if (17.0..21.0).contains(&h) {
        PRICE_PEAK
    } else {
        PRICE_MID
    }
}

/// Smooth synthetic day: a daylight RES bump, a load curve with a morning
/// rise and an evening peak plus noise, and a three-level tariff.
pub fn generate_ems_instance<R: Rng + ?Sized>(rng: &mut R, n: usize) -> EmsInstance {
    assert!(n >= 1, "at least one stage");
    let base = rng.random_range(LOAD_BASE_RANGE.0..LOAD_BASE_RANGE.1);
    let amp = rng.random_range(LOAD_AMPLITUDE_RANGE.0..LOAD_AMPLITUDE_RANGE.1);
    let peak = rng.random_range(RES_PEAK_RANGE.0..RES_PEAK_RANGE.1);
    let noise = Normal::new(0.0, 0.02 * base).expect("positive std");
    let mut res = Vec::with_capacity(n);
    let mut load = Vec::with_capacity(n);
    let mut buy = Vec::with_capacity(n);
    for k in 0..n {
        let h = hour(k, n);
        let daylight = ((h - 6.0) * std::f64::consts::PI / 12.0).sin().max(0.0);
        res.push(if (6.0..18.0).contains(&h) { peak * daylight } else { 0.0 });
        let daily = 0.5 * (1.0 - ((h - 4.0) * std::f64::consts::PI / 12.0).cos());
        let evening = (-(h - 19.0).powi(2) / 4.0).exp();
        load.push((base + amp * (0.5 * daily + evening) + noise.sample(rng)).max(0.0));
        buy.push(price_at(h));
    }
    let sell = buy.iter().map(|b| SELL_RATIO * b).collect();
    EmsInstance {
        res_forecast: res,
        load_forecast: load,
        buy_price: buy,
        sell_price: sell,
        diesel_cost: DIESEL_COST,
        diesel_max: DIESEL_MAX,
        storage_power: STORAGE_POWER,
        capacity: CAPACITY,
        efficiency: EFFICIENCY,
        initial_charge: INITIAL_CHARGE,
    }
}

/// Standard deviation of the forecast error, `0.10·forecast / 1.96`.
pub fn noise_std(forecast: f64) -> f64 {
    NOISE_CI * forecast / 1.96
}

/// Realized values `forecast + ξ` clipped to `[0, 2·forecast]`.
pub fn sample_realization<R: Rng + ?Sized>(instance: &EmsInstance, rng: &mut R) -> EmsRealization {
    let mut draw = |f: f64| {
        if f <= 0.0 {
            return 0.0;
        }
        let xi: f64 = Normal::new(0.0, noise_std(f)).expect("positive std").sample(rng);
        (f + xi).clamp(0.0, 2.0 * f)
    };
    let res = instance.res_forecast.iter().map(|&f| draw(f)).collect();
    let load = instance.load_forecast.iter().map(|&f| draw(f)).collect();
    EmsRealization { res, load }
}
