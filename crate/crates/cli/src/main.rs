//! `cheapsub`: Cheap Subsampling confidence intervals on CSV data, coverage
//! simulation sweeps, the truth oracle, and the seed-variability experiment.
//!
//! Exit codes: 0 success, 2 invalid input, data or configuration, 3 an
//! estimator failed after exhausting its retries.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cheapsub::intervals::Method;
use config::{EstimatorKind, ModelKind};

/// Invalid configuration value, reported with its field path.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Parser)]
#[command(name = "cheapsub", version, about = "Cheap Subsampling confidence intervals")]
struct Cli {
    /// Worker threads (default: all available cores). Results do not depend
    /// on this value.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Confidence intervals for an estimator on a CSV file.
    Ci(CiArgs),
    /// Coverage and relative width over a grid of scenarios.
    Simulate(SimulateArgs),
    /// Target value under a sustained regime for the simulation mechanism.
    Truth(TruthArgs),
    /// Simulate a longitudinal dataset as CSV.
    Generate(GenerateArgs),
    /// Run-to-run spread of the interval across random seeds on fixed data.
    SeedExperiment(SeedExperimentArgs),
}

#[derive(Debug, Args)]
struct CiArgs {
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorKind>,
    /// Column for the mean estimator (default: first column).
    #[arg(long)]
    column: Option<String>,
    /// Interval methods, comma separated.
    #[arg(long = "method", value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Subsample size; overrides --eta.
    #[arg(long, conflicts_with = "eta")]
    m: Option<usize>,
    /// Subsample proportion, m = floor(eta * n).
    #[arg(long)]
    eta: Option<f64>,
    /// Number of replicates.
    #[arg(long = "B", short = 'B')]
    b: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fresh-stream retries per failing replicate.
    #[arg(long)]
    max_retries: Option<usize>,
    /// Treatment level of the sustained regime (0 or 1).
    #[arg(long)]
    regime: Option<u8>,
    /// Skip the targeting step of the longitudinal estimator.
    #[arg(long)]
    no_targeting: bool,
    /// Write the CSV here (plus `<output>.config.toml`) instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[arg(long)]
    regime: Option<u8>,
    #[arg(long)]
    no_targeting: bool,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Subsample proportions, comma separated.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    /// Replicate counts, comma separated.
    #[arg(long = "B", short = 'B', value_delimiter = ',')]
    b: Option<Vec<usize>>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Simulated datasets per scenario.
    #[arg(long)]
    n_sim: Option<usize>,
    #[arg(long = "method", value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_retries: Option<usize>,
    /// Also write every simulated interval to intervals.csv.
    #[arg(long)]
    keep_intervals: bool,
    /// Directory for report.csv, report.json and config.toml.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TruthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    regime: Option<u8>,
    /// Gauss-Hermite nodes per dimension.
    #[arg(long)]
    nodes: Option<usize>,
    /// Monte Carlo trajectories for the cross-check.
    #[arg(long)]
    mc_draws: Option<u64>,
    #[arg(long)]
    mc_seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SeedExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Data CSV; simulated from --n and --data-seed when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorKind>,
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    regime: Option<u8>,
    #[arg(long)]
    no_targeting: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    data_seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    #[arg(long = "B", short = 'B', value_delimiter = ',')]
    b: Option<Vec<usize>>,
    /// Repetitions of the whole procedure per cell.
    #[arg(long)]
    n_seeds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Long-format CSV of every endpoint (plus `<output>.config.toml`).
    #[arg(long)]
    output: Option<PathBuf>,
}

macro_rules! set {
    ($cfg:ident . $field:ident, $value:expr) => {
        if let Some(v) = $value {
            $cfg.$field = v;
        }
    };
}

impl CiArgs {
    fn resolve(self) -> anyhow::Result<config::CiConfig> {
        let mut c: config::CiConfig = match &self.config {
            Some(p) => config::load(p)?,
            None => Default::default(),
        };
        if self.input.is_some() {
            c.input = self.input;
        }
        if self.column.is_some() {
            c.column = self.column;
        }
        if self.m.is_some() {
            c.m = self.m;
        }
        if let Some(eta) = self.eta {
            c.eta = eta;
            c.m = None;
        }
        if self.output.is_some() {
            c.output = self.output;
        }
        set!(c.estimator, self.estimator);
        set!(c.methods, self.methods);
        set!(c.b, self.b);
        set!(c.alpha, self.alpha);
        set!(c.master_seed, self.seed);
        set!(c.max_retries, self.max_retries);
        set!(c.regime, self.regime);
        if self.no_targeting {
            c.targeting = false;
        }
        c.validate()?;
        Ok(c)
    }
}

impl SimulateArgs {
    fn resolve(self) -> anyhow::Result<config::SimulateConfig> {
        let mut c: config::SimulateConfig = match &self.config {
            Some(p) => config::load(p)?,
            None => Default::default(),
        };
        set!(c.model, self.model);
        set!(c.regime, self.regime);
        set!(c.n, self.n);
        set!(c.eta, self.eta);
        set!(c.b, self.b);
        set!(c.alpha, self.alpha);
        set!(c.n_sim, self.n_sim);
        set!(c.methods, self.methods);
        set!(c.master_seed, self.seed);
        set!(c.max_retries, self.max_retries);
        set!(c.output_dir, self.output_dir);
        if self.no_targeting {
            c.targeting = false;
        }
        if self.keep_intervals {
            c.keep_intervals = true;
        }
        c.validate()?;
        Ok(c)
    }
}

impl TruthArgs {
    fn resolve(self) -> anyhow::Result<config::TruthConfig> {
        let mut c: config::TruthConfig = match &self.config {
            Some(p) => config::load(p)?,
            None => Default::default(),
        };
        set!(c.regime, self.regime);
        set!(c.nodes, self.nodes);
        set!(c.mc_draws, self.mc_draws);
        set!(c.mc_seed, self.mc_seed);
        if self.output.is_some() {
            c.output = self.output;
        }
        c.validate()?;
        Ok(c)
    }
}

impl GenerateArgs {
    fn resolve(self) -> anyhow::Result<config::GenerateConfig> {
        let mut c: config::GenerateConfig = match &self.config {
            Some(p) => config::load(p)?,
            None => Default::default(),
        };
        set!(c.n, self.n);
        set!(c.master_seed, self.seed);
        if self.output.is_some() {
            c.output = self.output;
        }
        c.validate()?;
        Ok(c)
    }
}

impl SeedExperimentArgs {
    fn resolve(self) -> anyhow::Result<config::SeedExperimentConfig> {
        let mut c: config::SeedExperimentConfig = match &self.config {
            Some(p) => config::load(p)?,
            None => Default::default(),
        };
        if self.input.is_some() {
            c.input = self.input;
        }
        if self.column.is_some() {
            c.column = self.column;
        }
        if self.output.is_some() {
            c.output = self.output;
        }
        set!(c.estimator, self.estimator);
        set!(c.regime, self.regime);
        set!(c.n, self.n);
        set!(c.data_seed, self.data_seed);
        set!(c.eta, self.eta);
        set!(c.b, self.b);
        set!(c.n_seeds, self.n_seeds);
        set!(c.master_seed, self.seed);
        set!(c.alpha, self.alpha);
        if self.no_targeting {
            c.targeting = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let workers = cli.workers;
    if workers == Some(0) {
        return Err(ConfigError("--workers: must be at least 1".into()).into());
    }
    match cli.command {
        Command::Ci(a) => commands::ci(&a.resolve()?),
        Command::Simulate(a) => commands::simulate(&a.resolve()?, workers),
        Command::Truth(a) => commands::truth(&a.resolve()?, workers),
        Command::Generate(a) => commands::generate(&a.resolve()?),
        Command::SeedExperiment(a) => commands::seed_experiment(&a.resolve()?, workers),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<cheapsub::Error>() {
        Some(e) if e.is_estimator_failure() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
