use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;
mod pipeline;

use config::Experiment;
use output::CheckFailed;

/// Piecewise-linear activation approximation on a broadcast NoC: fitting,
/// cycle-level simulation, LUT baselines and cost reports.
#[derive(Parser)]
#[command(name = "nova", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit PWL approximators with the MLP trainer and the direct oracle.
    Fit(Common),
    /// Simulate one profile on NOVA and the LUT baselines.
    Sim {
        #[command(flatten)]
        common: Common,
        /// Also write the per-flit trace.
        #[arg(long)]
        trace: bool,
    },
    /// Area, power and energy reports.
    Report {
        #[command(flatten)]
        common: Common,
        /// Check published ratio claims; exit 2 if any fails.
        #[arg(long)]
        against_paper: bool,
    },
    /// Fit and simulate every profile x function x breakpoint combination.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn load(self) -> anyhow::Result<Experiment> {
        Experiment::load(self.config.as_deref(), self.seed, self.out_dir)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Fit(common) => commands::fit::run(&common.load()?),
        Command::Sim { common, trace } => commands::sim::run(&common.load()?, trace),
        Command::Report { common, against_paper } => commands::report::run(&common.load()?, against_paper),
        Command::Sweep { common, trace } => commands::sweep::run(&common.load()?, trace),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<CheckFailed>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
