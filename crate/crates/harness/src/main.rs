use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use unify_harness::ems::{ems_baselines, ems_data, evaluate_ems_agent, train_ems_method, Budget};
use unify_harness::smc::{evaluate_smc_agent, pto_point, smc_data, train_smc_unify};
use unify_harness::{
    emit_report, load_records, run_and_report, write_series, Experiment, ExperimentConfig, ExperimentOutput,
    HarnessError, MetricsRecord, RecordKind,
};
use unify_learner::Agent;

#[derive(Parser)]
#[command(name = "unify", version, about = "Decomposed policies: experiments, baselines and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file mirroring the experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sequential single-stream execution with epoch budgets.
    #[arg(long)]
    deterministic: bool,
    /// Wall-clock budget per trained method.
    #[arg(long)]
    budget_seconds: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Domain {
    Ems,
    Smc,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic instances and datasets.
    Generate {
        #[arg(value_enum)]
        domain: Domain,
        /// EMS days or SMC historical pairs.
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// EMS stages per day.
        #[arg(long, default_value_t = 12)]
        stages: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Train a learned method and save its checkpoint.
    Train {
        /// Experiment whose data and settings are used.
        experiment: String,
        /// Learned method; defaults to the first one configured.
        #[arg(long)]
        method: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint on the experiment's test set.
    Evaluate {
        experiment: String,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the non-learned methods of an experiment.
    Baseline {
        experiment: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run a full pipeline and write its report.
    Experiment {
        experiment: String,
        #[command(flatten)]
        common: Common,
    },
    /// Rebuild the CSV series from a saved records.json.
    Report {
        /// Directory holding records.json.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(experiment: &str, common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let exp: Experiment = experiment.parse()?;
    let mut c = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::preset(exp),
    };
    if c.experiment != exp {
        return Err(HarnessError::Config(format!("config file is for {}, not {exp}", c.experiment)));
    }
    if let Some(s) = common.seed {
        c.seed = s;
    }
    if let Some(o) = &common.out {
        c.out_dir = o.clone();
    }
    c.deterministic |= common.deterministic;
    if common.budget_seconds.is_some() {
        c.budget_seconds = common.budget_seconds;
    }
    c.validate()?;
    Ok(c)
}

fn learned_method(c: &ExperimentConfig, method: Option<String>) -> Result<String, HarnessError> {
    let learned = ["unify", "unify-single-step", "unify-sequential", "rl", "safety-layer"];
    let m = method
        .or_else(|| c.methods.iter().find(|m| learned.contains(&m.as_str())).cloned())
        .ok_or_else(|| HarnessError::Config("no learned method configured".into()))?;
    if !learned.contains(&m.as_str()) || !c.experiment.methods().contains(&m.as_str()) {
        return Err(HarnessError::UnknownMethod {
            experiment: c.experiment.to_string(),
            method: m,
        });
    }
    Ok(m)
}

fn print_records(records: &[MetricsRecord]) {
    println!("{:<20} {:<10} {:>9} {:>12} {:>12} {:>12}", "method", "kind", "scenarios", "gap_mean", "gap_std", "cost_mean");
    for r in records.iter().filter(|r| r.kind != RecordKind::Epoch) {
        let kind = format!("{:?}", r.kind).to_lowercase();
        let s = r.scenarios.map(|s| s.to_string()).unwrap_or_default();
        println!(
            "{:<20} {:<10} {:>9} {:>12.5} {:>12.5} {:>12.3}",
            r.method, kind, s, r.gap_mean, r.gap_std, r.cost_mean
        );
    }
}

fn save_output(c: &ExperimentConfig, records: Vec<MetricsRecord>, start: Instant) -> Result<(), HarnessError> {
    let out = ExperimentOutput {
        experiment: c.experiment,
        records,
        budget_seconds: c.budget_seconds,
    };
    print_records(&out.records);
    let files = emit_report(&out, c, &c.out_dir, start.elapsed().as_secs_f64())?;
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn generate(domain: Domain, count: usize, stages: usize, common: &Common) -> Result<(), HarnessError> {
    let seed = common.seed.unwrap_or(0);
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("data"));
    std::fs::create_dir_all(&out).map_err(|e| HarnessError::Io {
        path: out.display().to_string(),
        msg: e.to_string(),
    })?;
    match domain {
        Domain::Ems => {
            let mut rng = unify_harness::seeds::stream(seed, "generate/ems");
            for i in 0..count {
                let inst = unify_ems::generate_ems_instance(&mut rng, stages);
                let real = unify_ems::sample_realization(&inst, &mut rng);
                unify_ems::save_instance(&inst, &out.join(format!("day{i}.toml")))?;
                unify_ems::save_realization(&real, &out.join(format!("day{i}_realization.toml")))?;
            }
            println!("wrote {count} EMS days to {}", out.display());
        }
        Domain::Smc => {
            let mut rng = unify_harness::seeds::stream(seed, "generate/smc");
            let inst = unify_smc::generate_instance(
                &mut rng,
                unify_smc::DESK_ELEMENTS,
                unify_smc::DESK_SETS,
                unify_smc::DESK_DENSITY,
            )?;
            let data = unify_smc::generate_dataset(&inst, count, &mut rng);
            unify_smc::io::save_instance(&inst, &out.join("instance.toml"))?;
            unify_smc::io::save_dataset(&data, &out.join("dataset.csv"))?;
            println!("wrote SMC instance and {count} pairs to {}", out.display());
        }
    }
    Ok(())
}

fn train(experiment: &str, method: Option<String>, common: &Common) -> Result<(), HarnessError> {
    let c = load_config(experiment, common)?;
    let m = learned_method(&c, method)?;
    let start = Instant::now();
    let (agent, records) = if c.experiment.is_ems() {
        let data = ems_data(&c)?;
        let budget = match c.budget_seconds {
            Some(s) if !c.deterministic => Budget::Seconds(s, c.epochs),
            _ => Budget::Epochs(c.epochs),
        };
        train_ems_method(&c, &data, &m, budget)?
    } else {
        train_smc_unify(&c, &smc_data(&c)?, &m)?
    };
    save_output(&c, records, start)?;
    let path = c.out_dir.join(format!("{m}.checkpoint.json"));
    agent.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn evaluate(experiment: &str, method: Option<String>, checkpoint: &Path, common: &Common) -> Result<(), HarnessError> {
    let c = load_config(experiment, common)?;
    let m = learned_method(&c, method)?;
    let agent = Agent::load(checkpoint)?;
    let start = Instant::now();
    let record = if c.experiment.is_ems() {
        evaluate_ems_agent(&m, RecordKind::Trained, &agent, &ems_data(&c)?, c.experiment)?
    } else {
        evaluate_smc_agent(&m, RecordKind::Trained, &agent, &smc_data(&c)?)?
    };
    save_output(&c, vec![record], start)
}

fn baseline(experiment: &str, common: &Common) -> Result<(), HarnessError> {
    let c = load_config(experiment, common)?;
    let start = Instant::now();
    let records = match c.experiment {
        Experiment::EmsTuning | Experiment::EmsConstraints => ems_baselines(&c, &ems_data(&c)?)?.0,
        Experiment::SmcDfl => vec![pto_point(&c, &smc_data(&c)?)?],
        Experiment::SmcStochastic => {
            let mut c2 = c.clone();
            c2.methods.retain(|m| m != "unify");
            if c2.methods.is_empty() {
                return Err(HarnessError::Config("no baseline configured".into()));
            }
            unify_harness::run_smc_stochastic(&c2)?.records
        }
    };
    save_output(&c, records, start)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Generate {
            domain,
            count,
            stages,
            common,
        } => generate(domain, count, stages, &common),
        Command::Train {
            experiment,
            method,
            common,
        } => train(&experiment, method, &common),
        Command::Evaluate {
            experiment,
            method,
            checkpoint,
            common,
        } => evaluate(&experiment, method, &checkpoint, &common),
        Command::Baseline { experiment, common } => baseline(&experiment, &common),
        Command::Experiment { experiment, common } => {
            let c = load_config(&experiment, &common)?;
            let out = run_and_report(&c)?;
            print_records(&out.records);
            println!("wrote report to {}", c.out_dir.display());
            Ok(())
        }
        Command::Report { input, out } => {
            let records = load_records(&input.join("records.json"))?;
            let dir = out.unwrap_or(input);
            for f in write_series(&records, &dir)? {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
