//! Command-line front end. Every subcommand writes its artifacts plus a
//! `<command>.manifest.json` into the output directory; `replay` reruns a
//! manifest and reproduces the artifacts byte for byte.

mod commands;
pub mod config;
pub mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use commands::{BayesArgs, EstimateArgs, GenArgs, MetricsArgs, PrepArgs, QfiArgs, SimulateArgs, TrainArgs};
pub use config::RunConfig;

use crate::physics::FidelityTier;
use crate::{Error, Result};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "ionsense", version, about = "Dressed-ion sensing: simulation, datasets, regression and bounds")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Sets both the data and the training seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Simulation tier: harmonic, rwa-slow or full.
    #[arg(long, global = true)]
    pub tier: Option<FidelityTier>,
    #[arg(long, global = true, env = "IONSENSE_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads for parameter-parallel work.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Survival curve `P_D(t)` for one target field.
    Simulate(SimulateArgs),
    /// STIRAP preparation and readout populations.
    Prep(PrepArgs),
    /// Synthetic training dataset.
    Gen(GenArgs),
    /// Train the regressor on a dataset.
    Train(TrainArgs),
    /// Estimate target parameters from response vectors.
    Estimate(EstimateArgs),
    /// Grid posterior from averaged responses.
    Bayes(BayesArgs),
    /// Quantum Fisher information and precision bound.
    Qfi(QfiArgs),
    /// Accuracy metrics for target/estimate pairs.
    Metrics(MetricsArgs),
    /// Rerun a manifest into the output directory.
    #[serde(skip)]
    Replay {
        manifest: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Prep(_) => "prep",
            Command::Gen(_) => "gen",
            Command::Train(_) => "train",
            Command::Estimate(_) => "estimate",
            Command::Bayes(_) => "bayes",
            Command::Qfi(_) => "qfi",
            Command::Metrics(_) => "metrics",
            Command::Replay { .. } => "replay",
        }
    }

    /// Input paths made absolute, so a manifest can be replayed from
    /// anywhere.
    fn resolved(&self) -> Result<Self> {
        let abs = |p: &PathBuf| std::path::absolute(p).map_err(Error::from);
        let mut c = self.clone();
        match &mut c {
            Command::Train(a) => a.dataset = abs(&a.dataset)?,
            Command::Estimate(a) => {
                a.model = abs(&a.model)?;
                a.responses = abs(&a.responses)?;
            }
            Command::Bayes(a) => a.responses = abs(&a.responses)?,
            Command::Metrics(a) => a.input = abs(&a.input)?,
            _ => {}
        }
        Ok(c)
    }
}

/// Everything needed to regenerate a run's artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: RunConfig,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn file_name(command: &Command) -> String {
        format!("{}.manifest.json", command.name())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: Self = io::read_json(path)?;
        if m.tool != TOOL {
            return Err(Error::Format(format!("{}: not an {TOOL} manifest", path.display())));
        }
        m.config.validate()?;
        Ok(m)
    }
}

/// Configuration file (or defaults) with the global flag overrides applied.
pub fn resolve_config(path: Option<&Path>, seed: Option<u64>, tier: Option<FidelityTier>) -> Result<RunConfig> {
    let mut config = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::invalid(format!("config {}: {e}", p.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        config.seeds.data = s;
        config.seeds.training = s;
    }
    if let Some(t) = tier {
        config.tier = t;
    }
    config.validate()?;
    Ok(config)
}

/// Runs one command into `out_dir` and writes its manifest. Returns the
/// manifest.
pub fn execute(command: &Command, config: &RunConfig, out_dir: &Path) -> Result<Manifest> {
    if let Command::Replay { manifest } = command {
        let m = Manifest::load(manifest)?;
        if matches!(m.command, Command::Replay { .. }) {
            return Err(Error::Format("a manifest cannot replay another replay".into()));
        }
        return execute(&m.command, &m.config, out_dir);
    }
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let command = command.resolved()?;
    let ctx = commands::Context { config, out_dir };
    let outputs = match &command {
        Command::Simulate(a) => commands::simulate(&ctx, a)?,
        Command::Prep(a) => commands::prep(&ctx, a)?,
        Command::Gen(a) => commands::gen(&ctx, a)?,
        Command::Train(a) => commands::train(&ctx, a)?,
        Command::Estimate(a) => commands::estimate(&ctx, a)?,
        Command::Bayes(a) => commands::bayes(&ctx, a)?,
        Command::Qfi(a) => commands::qfi_report(&ctx, a)?,
        Command::Metrics(a) => commands::metrics_report(&ctx, a)?,
        Command::Replay { .. } => unreachable!("handled above"),
    };
    let manifest = Manifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: command.clone(),
        config: config.clone(),
        outputs,
    };
    io::write_json(&out_dir.join(Manifest::file_name(&command)), &manifest)?;
    Ok(manifest)
}

/// 2 for configuration and parameter errors, 3 for unreadable or
/// inconsistent data, 4 for numerical failures.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidParameter(_) | Error::StepTooLarge { .. } | Error::SpanTooLong { .. } => 2,
        Error::Io(_) | Error::Format(_) | Error::DimensionMismatch { .. } | Error::Empty(_) => 3,
        Error::NormDrift { .. }
        | Error::NonFinite { .. }
        | Error::PosteriorUnderflow { .. }
        | Error::NotConverged { .. } => 4,
    }
}

pub fn run(cli: Cli) -> Result<Manifest> {
    if let Some(n) = cli.threads {
        // a pool may already exist when called from a library user
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let config = match &cli.command {
        Command::Replay { .. } => RunConfig::default(),
        _ => resolve_config(cli.config.as_deref(), cli.seed, cli.tier)?,
    };
    execute(&cli.command, &config, &cli.out_dir)
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let out_dir = cli.out_dir.clone();
    match run(cli) {
        Ok(m) => {
            eprintln!("wrote {} to {}", m.outputs.join(", "), out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
