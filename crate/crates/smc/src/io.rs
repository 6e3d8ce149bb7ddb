use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::demand::Dataset;
use crate::error::SmcError;
use crate::instance::SmcInstance;

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n_elements: usize,
    n_sets: usize,
    /// `(element, set)` pairs with `a_ij = 1`.
    availability: Vec<(usize, usize)>,
    costs: Vec<f64>,
    penalties: Vec<f64>,
    rate_slopes: Vec<f64>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> SmcError {
    SmcError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

pub fn instance_to_toml(instance: &SmcInstance) -> String {
    let f = InstanceFile {
        n_elements: instance.n_elements,
        n_sets: instance.n_sets,
        availability: instance.pairs(),
        costs: instance.costs.clone(),
        penalties: instance.penalties.clone(),
        rate_slopes: instance.rate_slopes.clone(),
    };
    toml::to_string(&f).expect("instance serializes")
}

pub fn instance_from_toml(text: &str) -> Result<SmcInstance, SmcError> {
    let f: InstanceFile = toml::from_str(text).map_err(|e| SmcError::Invalid(e.to_string()))?;
    let inst = SmcInstance::from_pairs(f.n_elements, f.n_sets, &f.availability, f.costs, f.rate_slopes)?;
    if inst.penalties != f.penalties {
        return Err(SmcError::Invalid("penalties do not follow the 10 x max cost rule".into()));
    }
    Ok(inst)
}

pub fn save_instance(instance: &SmcInstance, path: &Path) -> Result<(), SmcError> {
    std::fs::write(path, instance_to_toml(instance)).map_err(|e| io_err(path, e))
}

pub fn load_instance(path: &Path) -> Result<SmcInstance, SmcError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    instance_from_toml(&text)
}

/// Writes `o,d1,...,dn` rows with a header.
pub fn save_dataset(data: &Dataset, path: &Path) -> Result<(), SmcError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    if let Some((_, d)) = data.rows.first() {
        let mut header = vec!["o".to_string()];
        header.extend((1..=d.len()).map(|i| format!("d{i}")));
        w.write_record(&header).map_err(|e| io_err(path, e))?;
    }
    for (o, d) in &data.rows {
        let mut rec = vec![o.to_string()];
        rec.extend(d.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn load_dataset(path: &Path) -> Result<Dataset, SmcError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let vals: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| io_err(path, e))?;
        if vals.is_empty() {
            continue;
        }
        rows.push((vals[0], vals[1..].to_vec()));
    }
    Ok(Dataset { rows })
}
