//! Command-line front end: run sweeps, solve single deployments, and
//! replay thresholds through the slotted simulator.
//!
//! Exit codes: 0 on success, 2 for configuration or argument problems,
//! 3 for filesystem errors.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use deltasense::error::{ModelError, Result};
use deltasense::experiment::{export, run_sweep, summarize, ExperimentConfig};
use deltasense::geometry::Deployment;
use deltasense::optim::Method;
use deltasense::rng::derive_seed;
use deltasense::sensing::{SensingModel, ThresholdVector};
use deltasense::sim::{run_slots, SimConfig};

#[derive(Parser)]
#[command(
    name = "deltasense",
    version,
    about = "Transmission-threshold planning for dense event-reporting radio networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Preset scale for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Profile {
    /// Use the device counts, deployment count, and slot budget from the
    /// configuration file as written.
    Desk,
    /// Override them with the large campaign: device counts 25..250,
    /// 250 deployments each, one million slots per validation run.
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured solver over generated deployments and write
    /// rows, summaries, and plot tables into a directory.
    Sweep {
        /// TOML sweep configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Profile::Desk)]
        profile: Profile,
        /// Override the configuration's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve one deployment with one method and print the scored answer
    /// as JSON.
    Solve {
        /// Method tag, e.g. equal, sca, bcd, voronoi_min, ga, pso, knn,
        /// qlearn.
        #[arg(long)]
        method: Method,
        /// Deployment JSON file (area plus device coordinates).
        #[arg(long)]
        deployment: PathBuf,
        /// TOML sweep configuration supplying the model, budget, and
        /// solver knobs.
        #[arg(long)]
        config: PathBuf,
    },
    /// Replay a threshold vector through the slotted simulator and print
    /// the measured rates as JSON. The sensing model is the default one
    /// (decay rate 1, event probability 0.1).
    Simulate {
        /// Deployment JSON file (area plus device coordinates).
        #[arg(long)]
        deployment: PathBuf,
        /// JSON array with one threshold in (0, 1] per device.
        #[arg(long)]
        delta: PathBuf,
        /// Slots to simulate.
        #[arg(long, default_value_t = 100_000)]
        ttis: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn read_text(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| ModelError::io(path.display().to_string(), e))
}

fn load_deployment(path: &PathBuf) -> Result<Deployment> {
    Deployment::from_json(&read_text(path)?)
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Sweep {
            config,
            out,
            profile,
            seed,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if profile == Profile::Full {
                cfg.n_list = vec![25, 50, 100, 150, 200, 250];
                cfg.deployments = 250;
                cfg.ttis = 1_000_000;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let rows = run_sweep(&cfg)?;
            export(&rows, &out)?;
            let summaries = summarize(&rows)?;
            println!(
                "wrote {} rows ({} summaries) to {}",
                rows.len(),
                summaries.len(),
                out.display()
            );
            Ok(())
        }
        Command::Solve {
            method,
            deployment,
            config,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dep = load_deployment(&deployment)?;
            let model = SensingModel::new(cfg.eta, cfg.alpha)?;
            let budget = deltasense::sensing::ErrorBudget::new(cfg.budget, &model)?;
            let cals = deltasense::cdf::calibrate_w(
                &dep,
                &model,
                cfg.calibration_samples,
                derive_seed(cfg.master_seed, "calib:solve"),
            )?;
            let seed = derive_seed(cfg.master_seed, &format!("solve:{method}:cli"));
            let result =
                deltasense::experiment::solve_single(&cfg, method, &dep, &cals, &model, &budget, seed)?;
            let json = serde_json::to_string_pretty(&result)
                .map_err(|e| ModelError::Serialization(e.to_string()))?;
            println!("{json}");
            Ok(())
        }
        Command::Simulate {
            deployment,
            delta,
            ttis,
            seed,
        } => {
            let dep = load_deployment(&deployment)?;
            let raw: Vec<f64> = serde_json::from_str(&read_text(&delta)?)
                .map_err(|e| ModelError::Serialization(format!("bad threshold file: {e}")))?;
            let tv = ThresholdVector::new(raw)?;
            let model = SensingModel::new(1.0, 0.1)?;
            let report = run_slots(&dep, &model, &tv, &SimConfig::new(ttis, seed))?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| ModelError::Serialization(e.to_string()))?;
            println!("{json}");
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        let code = match e {
            ModelError::Io { .. } => 3,
            _ => 2,
        };
        std::process::exit(code);
    }
}
