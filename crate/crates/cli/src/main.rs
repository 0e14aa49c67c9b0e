mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "chemoflow", version, about = "Minimizing-movement runs and kernel checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a trajectory and write trajectory.csv, final_state.csv, report.json.
    Simulate { config: PathBuf },
    /// Solve for the stationary pair.
    Stationary { config: PathBuf },
    /// Kernel identities and bounds.
    Kernels {
        #[command(subcommand)]
        action: KernelsAction,
    },
    /// Repeat a simulation over values of one parameter.
    Sweep {
        config: PathBuf,
        /// One of epsilon, tau, n.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
}

#[derive(Debug, Subcommand)]
enum KernelsAction {
    /// Print the verification table as JSON.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { config } => commands::simulate(config),
        Command::Stationary { config } => commands::stationary(config),
        Command::Kernels {
            action: KernelsAction::Verify,
        } => commands::kernels_verify(),
        Command::Sweep { config, param, values } => commands::sweep(config, param, values),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
