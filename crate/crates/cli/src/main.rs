mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CommandName;
use config::Params;
use error::CliError;

/// Random walks in East-type kinetically constrained environments.
#[derive(Debug, Parser)]
#[command(name = "eastwalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommandArgs {
    /// TOML file with parameter values; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: Params,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Asymptotic velocity of the walker on a ring
    Simulate(CommandArgs),
    /// Time-averaged environment profile around the walker
    Profile(CommandArgs),
    /// Survival function u(s) of the first legal ring at a bulk site
    USurvival(CommandArgs),
    /// Monte Carlo estimate of the cubic velocity coefficient
    Kappa(CommandArgs),
    /// Three-point correlator grid with the orientation and two-point checks
    Criterion(CommandArgs),
    /// Degenerate edge walker and East front, coupled
    Front(CommandArgs),
    /// Exact finite-ring oracle checks
    Exact(CommandArgs),
    /// Perturbation series terms against their bounds
    SeriesCheck(CommandArgs),
    /// Velocity across an epsilon grid
    Figure3(CommandArgs),
    /// Profile window around the walker
    Figure6(CommandArgs),
}

impl Command {
    fn split(self) -> (CommandName, CommandArgs) {
        match self {
            Command::Simulate(a) => (CommandName::Simulate, a),
            Command::Profile(a) => (CommandName::Profile, a),
            Command::USurvival(a) => (CommandName::USurvival, a),
            Command::Kappa(a) => (CommandName::Kappa, a),
            Command::Criterion(a) => (CommandName::Criterion, a),
            Command::Front(a) => (CommandName::Front, a),
            Command::Exact(a) => (CommandName::Exact, a),
            Command::SeriesCheck(a) => (CommandName::SeriesCheck, a),
            Command::Figure3(a) => (CommandName::Figure3, a),
            Command::Figure6(a) => (CommandName::Figure6, a),
        }
    }
}

fn run(name: CommandName, args: CommandArgs) -> Result<(), CliError> {
    let params = config::resolve(args.config.as_deref(), args.params)?;
    let out = params
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", name.as_str())));
    let job = commands::prepare(name, params)?;
    let report = job()?;
    output::write_results(&report.records, &out)?;
    if let Some(plot) = &report.plot {
        std::fs::write(out.with_extension("svg"), output::render_svg(plot))?;
    }
    println!("{}: {} rows written to {}", name.as_str(), report.records.len(), out.display());
    match report.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = cli.command.split();
    match run(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
