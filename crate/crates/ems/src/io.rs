use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::EmsError;
use crate::instance::{EmsInstance, EmsRealization};

pub const ENERGY_UNIT: &str = "kWh per stage";
pub const PRICE_UNIT: &str = "currency per kWh";

#[derive(Serialize, Deserialize)]
struct Units {
    energy: String,
    price: String,
}

impl Units {
    fn standard() -> Self {
        Units {
            energy: ENERGY_UNIT.into(),
            price: PRICE_UNIT.into(),
        }
    }

    fn check(&self) -> Result<(), EmsError> {
        if self.energy != ENERGY_UNIT || self.price != PRICE_UNIT {
            return Err(EmsError::InvalidInstance(format!(
                "units ({}, {}) differ from ({ENERGY_UNIT}, {PRICE_UNIT})",
                self.energy, self.price
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    units: Units,
    #[serde(flatten)]
    instance: EmsInstance,
}

#[derive(Serialize, Deserialize)]
struct RealizationFile {
    units: Units,
    #[serde(flatten)]
    realization: EmsRealization,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> EmsError {
    EmsError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

fn parse_err(e: impl std::fmt::Display) -> EmsError {
    EmsError::InvalidInstance(e.to_string())
}

pub fn instance_to_toml(instance: &EmsInstance) -> String {
    toml::to_string(&InstanceFile {
        units: Units::standard(),
        instance: instance.clone(),
    })
    .expect("instance serializes")
}

pub fn instance_from_toml(text: &str) -> Result<EmsInstance, EmsError> {
    let f: InstanceFile = toml::from_str(text).map_err(parse_err)?;
    f.units.check()?;
    f.instance.check()?;
    Ok(f.instance)
}

pub fn realization_to_toml(realization: &EmsRealization) -> String {
    toml::to_string(&RealizationFile {
        units: Units::standard(),
        realization: realization.clone(),
    })
    .expect("realization serializes")
}

pub fn realization_from_toml(text: &str) -> Result<EmsRealization, EmsError> {
    let f: RealizationFile = toml::from_str(text).map_err(parse_err)?;
    f.units.check()?;
    let r = f.realization;
    if r.res.len() != r.load.len() || r.res.iter().chain(&r.load).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(EmsError::InvalidInstance("realization must hold matching nonnegative profiles".into()));
    }
    Ok(r)
}

/// One virtual cost per line.
pub fn schedule_to_text(schedule: &[f64]) -> String {
    schedule.iter().map(|c| format!("{c}\n")).collect()
}

pub fn schedule_from_text(text: &str) -> Result<Vec<f64>, EmsError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| match l.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(EmsError::InvalidInstance(format!("bad schedule entry {l:?}"))),
        })
        .collect()
}

fn write(path: &Path, text: String) -> Result<(), EmsError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn read(path: &Path) -> Result<String, EmsError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn save_instance(instance: &EmsInstance, path: &Path) -> Result<(), EmsError> {
    write(path, instance_to_toml(instance))
}

pub fn load_instance(path: &Path) -> Result<EmsInstance, EmsError> {
    instance_from_toml(&read(path)?)
}

pub fn save_realization(realization: &EmsRealization, path: &Path) -> Result<(), EmsError> {
    write(path, realization_to_toml(realization))
}

pub fn load_realization(path: &Path) -> Result<EmsRealization, EmsError> {
    realization_from_toml(&read(path)?)
}

pub fn save_schedule(schedule: &[f64], path: &Path) -> Result<(), EmsError> {
    write(path, schedule_to_text(schedule))
}

pub fn load_schedule(path: &Path) -> Result<Vec<f64>, EmsError> {
    schedule_from_text(&read(path)?)
}
