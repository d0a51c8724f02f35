use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod error;
mod grid;
mod input;
mod run;
mod simulate;

/// Selective ensemble local fdr estimation.
#[derive(Parser, Debug)]
#[command(name = "fdrsafe", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate local fdr for a column of test statistics.
    Run(run::RunArgs),
    /// Run a simulation study and write metric tables.
    Simulate(simulate::SimulateArgs),
    /// List the resolved model grid.
    Grid(grid::GridArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Grid(args) => grid::run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fdrsafe: {e}");
            ExitCode::from(e.code())
        }
    }
}
