//! `east` — run the embedding-regularized training experiments from the
//! shell: generate datasets, train and compare systems, search λ, probe
//! model complexity, and self-check the numerical core.

mod commands;
mod manifest;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::CliError;

/// Train low-complexity students whose feature maps learn from teacher
/// embeddings, and compare them against plain and distilled training.
#[derive(Parser, Debug)]
#[command(name = "east", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic labeled-clip dataset container.
    GenData(commands::GenDataArgs),
    /// Train one system; write checkpoint, history, and a metrics row.
    Train(commands::TrainArgs),
    /// Train across a λ grid and report the best validation mAP.
    Sweep(commands::SweepArgs),
    /// Compare four systems across train-set fractions and seeds.
    Limited(commands::LimitedArgs),
    /// Report backbone parameters and forward throughput of a student.
    Complexity(commands::ComplexityArgs),
    /// Run the built-in oracle and invariant checks.
    Selftest(commands::SelftestArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let started = Instant::now();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests arrive as clap "errors" but exit 0;
            // actual usage errors exit 2.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::GenData(args) => commands::gen_data(args, started),
        Command::Train(args) => commands::train(args, started),
        Command::Sweep(args) => commands::sweep(args, started),
        Command::Limited(args) => commands::limited(args, started),
        Command::Complexity(args) => commands::complexity(args, started),
        Command::Selftest(args) => commands::selftest(args, started),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
