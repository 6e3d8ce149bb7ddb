//! CSV series and the run manifest.
//!
//! Files written for experiment `<e>`:
//!
//! - `<e>_curves.csv`: `method,epoch,episodes,gap_mean,gap_std,failures,cost_mean,cost_std,oracle_mean`,
//!   one row per method and training epoch, measured on the epoch's batch.
//! - `<e>_summary.csv`: `method,kind,scenarios,episodes,gap_mean,gap_std,failures,cost_mean,cost_std,oracle_mean`,
//!   test-set evaluations (`kind` is untrained, trained, baseline or oracle).
//! - `<e>_mape.csv`: `method,element,mape`, when a method fitted rates.
//! - `<e>_timing.csv`: `method,kind,epoch,scenarios,seconds,runtime_ratio`.
//! - `records.json`: every record, from which `report` rebuilds the CSVs.
//! - `manifest.json`: config, seeds, versions, budget and wall-clock.
//!
//! Everything except the timing file, `records.json` and the manifest is
//! reproducible bit for bit in deterministic mode.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{io_err, HarnessError};
use crate::metrics::{ExperimentOutput, MetricsRecord, RecordKind};

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn kind_name(k: RecordKind) -> &'static str {
    match k {
        RecordKind::Epoch => "epoch",
        RecordKind::Untrained => "untrained",
        RecordKind::Trained => "trained",
        RecordKind::Baseline => "baseline",
        RecordKind::Oracle => "oracle",
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn stats(r: &MetricsRecord) -> Vec<String> {
    vec![
        r.episodes.to_string(),
        r.gap_mean.to_string(),
        r.gap_std.to_string(),
        opt(r.failures),
        r.cost_mean.to_string(),
        r.cost_std.to_string(),
        r.oracle_mean.to_string(),
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub config: ExperimentConfig,
    /// Seed of every configured method's stream.
    pub method_seeds: Vec<(String, u64)>,
    pub budget_seconds: Option<f64>,
    pub wall_clock_seconds: f64,
    pub files: Vec<String>,
}

/// Writes the CSV series of `output` into `out_dir`; returns the paths.
pub fn write_series(output: &ExperimentOutput, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let name = output.experiment.name();
    let mut files = Vec::new();

    let path = out_dir.join(format!("{name}_curves.csv"));
    write_csv(
        &path,
        &["method", "epoch", "episodes", "gap_mean", "gap_std", "failures", "cost_mean", "cost_std", "oracle_mean"],
        output.records.iter().filter(|r| r.kind == RecordKind::Epoch).map(|r| {
            let mut row = vec![r.method.clone(), opt(r.epoch)];
            row.extend(stats(r));
            row
        }),
    )?;
    files.push(path);

    let path = out_dir.join(format!("{name}_summary.csv"));
    write_csv(
        &path,
        &["method", "kind", "scenarios", "episodes", "gap_mean", "gap_std", "failures", "cost_mean", "cost_std", "oracle_mean"],
        output.records.iter().filter(|r| r.kind != RecordKind::Epoch).map(|r| {
            let mut row = vec![r.method.clone(), kind_name(r.kind).into(), opt(r.scenarios)];
            row.extend(stats(r));
            row
        }),
    )?;
    files.push(path);

    if output.records.iter().any(|r| !r.mape.is_empty()) {
        let path = out_dir.join(format!("{name}_mape.csv"));
        write_csv(
            &path,
            &["method", "element", "mape"],
            output.records.iter().flat_map(|r| {
                r.mape
                    .iter()
                    .enumerate()
                    .map(|(i, m)| vec![r.method.clone(), i.to_string(), m.to_string()])
            }),
        )?;
        files.push(path);
    }

    let path = out_dir.join(format!("{name}_timing.csv"));
    write_csv(
        &path,
        &["method", "kind", "epoch", "scenarios", "seconds", "runtime_ratio"],
        output.records.iter().map(|r| {
            vec![
                r.method.clone(),
                kind_name(r.kind).into(),
                opt(r.epoch),
                opt(r.scenarios),
                r.seconds.to_string(),
                opt(r.runtime_ratio),
            ]
        }),
    )?;
    files.push(path);

    let path = out_dir.join("records.json");
    let text = serde_json::to_string_pretty(output).expect("records serialize");
    std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    files.push(path);
    Ok(files)
}

/// CSV series plus the manifest.
pub fn emit_report(
    output: &ExperimentOutput,
    config: &ExperimentConfig,
    out_dir: &Path,
    wall_clock_seconds: f64,
) -> Result<Vec<PathBuf>, HarnessError> {
    let mut files = write_series(output, out_dir)?;
    let manifest = Manifest {
        experiment: output.experiment.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        method_seeds: config.methods.iter().map(|m| (m.clone(), config.method_seed(m))).collect(),
        budget_seconds: output.budget_seconds,
        wall_clock_seconds,
        files: files
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
    };
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    files.push(path);
    Ok(files)
}

pub fn load_records(path: &Path) -> Result<ExperimentOutput, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

pub fn load_manifest(path: &Path) -> Result<Manifest, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}
