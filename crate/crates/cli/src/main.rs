//! `univlab`: command-line front end for the universality experiments.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "univlab", version, about = "Universality and sparse-dense equivalence experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Global {
    /// Flat `key = value` experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for `trials.csv` and `summary.json` (default `univlab-out`).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Swapping bounds on |E f(U) − E f(V)|.
    #[command(subcommand)]
    Lindeberg(commands::LindebergCmd),
    /// Multiuser channel capacity by exact enumeration.
    #[command(subcommand)]
    Cdma(commands::CdmaCmd),
    /// Replica-symmetric capacity formula.
    #[command(subcommand)]
    Replica(commands::ReplicaCmd),
    /// Box-constrained LASSO costs.
    #[command(subcommand)]
    Lasso(commands::LassoCmd),
    /// Wishart spectra and MIMO capacity.
    #[command(subcommand)]
    Spectra(commands::SpectraCmd),
    /// Sherrington–Kirkpatrick free entropy.
    #[command(subcommand)]
    Sk(commands::SkCmd),
    /// Checks a configuration file without running it.
    Validate,
    /// Runs the experiment described by `--config`.
    Run,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let outcome = match &cli.command {
        Command::Lindeberg(c) => commands::lindeberg(c, g),
        Command::Cdma(c) => commands::cdma(c, g),
        Command::Replica(c) => commands::replica(c, g),
        Command::Lasso(c) => commands::lasso(c, g),
        Command::Spectra(c) => commands::spectra(c, g),
        Command::Sk(c) => commands::sk(c, g),
        Command::Validate => commands::validate(g),
        Command::Run => commands::run(g),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
