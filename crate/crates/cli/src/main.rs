//! `fedsim` command-line runner: `run`, `compare` and `sweep`.

mod compare;
mod config;
mod error;
mod run;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::compare::{cmd_compare, ComparisonSpec};
use crate::error::CliResult;
use crate::sweep::{cmd_sweep, SweepSpec};

#[derive(Parser)]
#[command(
    name = "fedsim",
    version,
    about = "Deterministic federated-learning simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config (or a previous run's sidecar).
    Run { config: PathBuf },
    /// Discordance and accuracy summary for two metrics CSVs.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long = "target-acc")]
        target_acc: Option<f64>,
        /// Print machine-readable JSON.
        #[arg(long)]
        json: bool,
    },
    /// One run per value of a config key, e.g. `--set train.C=1,5,10`.
    Sweep {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=V1,V2,...")]
        set: String,
        #[arg(long = "target-acc")]
        target_acc: Option<f64>,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config } => run::cmd_run(&config),
        Command::Compare {
            a,
            b,
            epsilon,
            target_acc,
            json,
        } => cmd_compare(
            &ComparisonSpec {
                a,
                b,
                epsilon,
                target_accuracy: target_acc,
            },
            json,
        ),
        Command::Sweep {
            config,
            set,
            target_acc,
        } => cmd_sweep(&config, &SweepSpec::parse(&set)?, target_acc).map(|_| ()),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fedsim: {e}");
            e.exit_code()
        }
    }
}
