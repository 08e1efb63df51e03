//! Command-line front end: run configuration, the subcommands and their
//! output manifests.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Overrides;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "energaize", version, about = "Energy community simulation and multi-agent EV/storage training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scenario descriptor (JSON), overriding the config.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output root directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Override any config key, e.g. `--set gamma=0.95`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl RunArgs {
    pub fn load(&self) -> Result<config::RunConfig, CliError> {
        let o = Overrides {
            scenario: self.scenario.clone(),
            out: self.out.clone(),
            seed: self.seed,
            episodes: self.episodes,
            set: self.set.clone(),
        };
        config::load(self.config.as_deref(), &o)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the no-control baseline.
    Baseline(RunArgs),
    /// Train the agents and write checkpoints and the training log.
    Train(RunArgs),
    /// Evaluate a checkpoint deterministically.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// Checkpoint directory; defaults to `<out>/checkpoint`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Compare a controlled trace with the baseline.
    Report {
        #[command(flatten)]
        run: RunArgs,
        /// Defaults to `<out>/baseline/trace.csv`.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Defaults to `<out>/eval/trace.csv`.
        #[arg(long)]
        controlled: Option<PathBuf>,
    },
    /// Baseline, train, eval and report in sequence.
    Pipeline(RunArgs),
    /// Write a synthetic scenario.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        dwellings: usize,
        #[arg(long, default_value_t = 28)]
        days: usize,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Baseline(a) => {
            let dir = commands::cmd_baseline(&a.load()?)?;
            println!("baseline written to {}", dir.display());
        }
        Command::Train(a) => {
            let dir = commands::cmd_train(&a.load()?)?;
            println!("checkpoint written to {}", dir.display());
        }
        Command::Eval { run, checkpoint } => {
            let dir = commands::cmd_eval(&run.load()?, checkpoint.as_deref())?;
            println!("evaluation written to {}", dir.display());
        }
        Command::Report { run, baseline, controlled } => {
            let (dir, report) = commands::cmd_report(&run.load()?, baseline.as_deref(), controlled.as_deref())?;
            print!("{}", report.to_text());
            println!("report written to {}", dir.display());
        }
        Command::Pipeline(a) => {
            let report = commands::cmd_pipeline(&a.load()?)?;
            print!("{}", report.to_text());
        }
        Command::Synth { out, seed, dwellings, days } => {
            let p = commands::cmd_synth(&out, seed, dwellings, days)?;
            println!("scenario written to {}", p.display());
        }
    }
    Ok(())
}
