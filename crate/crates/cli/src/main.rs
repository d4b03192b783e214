//! `radargnn` command-line driver.
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use radargnn::InvarianceMode;

use config::{Overrides, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(radargnn::Error),
    Gate(String),
}

impl From<radargnn::Error> for CliError {
    fn from(e: radargnn::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(radargnn::Error::Numerical(_)) => 3,
            CliError::Gate(_) => 4,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Gate(m) => write!(f, "gate failed: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "radargnn", version, about = "Invariant graph neural networks for radar point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset split into train/val/test JSON-lines files.
    Generate(Common),
    /// Build kNN graphs for a split and dump their features.
    BuildGraph(Common),
    /// Train a model on the train split.
    Train(Common),
    /// Evaluate a checkpoint on a split.
    Eval(Common),
    /// Measure output deviation under random rigid transforms.
    InvarianceTest {
        #[command(flatten)]
        common: Common,
        /// Checkpoints to test; without any, each configured mode is freshly initialized.
        #[arg(long = "checkpoints", num_args = 1..)]
        checkpoints: Vec<PathBuf>,
        /// Transform family: claimed (per mode), translation, rigid or identity.
        #[arg(long, default_value = "claimed")]
        family: String,
    },
    /// Train every mode on shrinking subsets of the train split.
    DataReduction(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML or JSON run config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// none, translation or translation-rotation.
    #[arg(long)]
    mode: Option<InvarianceMode>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Weight of the box loss; 0 trains segmentation only.
    #[arg(long)]
    beta: Option<f64>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory with the split files.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// train, val or test.
    #[arg(long)]
    split: Option<String>,
    /// Dataset spec file (TOML or JSON), replacing the config's `dataset` table.
    #[arg(long)]
    spec: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let o = Overrides {
            seed: self.seed,
            mode: self.mode,
            epochs: self.epochs,
            lr: self.lr,
            beta: self.beta,
            out: self.out.clone(),
            data: self.data.clone(),
            checkpoint: self.checkpoint.clone(),
            split: self.split.clone(),
            spec: self.spec.clone(),
        };
        RunConfig::resolve(self.config.as_deref(), &o)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(c) => commands::generate(&c.resolve()?),
        Command::BuildGraph(c) => commands::build_graph(&c.resolve()?),
        Command::Train(c) => commands::train(&c.resolve()?),
        Command::Eval(c) => commands::eval(&c.resolve()?),
        Command::InvarianceTest {
            common,
            checkpoints,
            family,
        } => commands::invariance(&common.resolve()?, &checkpoints, &family),
        Command::DataReduction(c) => commands::data_reduction(&c.resolve()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
