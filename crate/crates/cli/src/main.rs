//! Command-line entry point for the experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use isoprune_cli::commands::{cmd_report, run_command, CommandKind};
use isoprune_cli::config::{Config, Overrides};
use isoprune_cli::error::Result;

#[derive(Parser)]
#[command(name = "isoprune", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file applied between profile defaults and flags.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for the manifest and artifacts.
    #[arg(long, default_value = "isoprune-out")]
    out: PathBuf,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ReportArgs {
    /// Path to a manifest.json from a previous run.
    manifest: PathBuf,

    /// Replay directory (defaults to a sibling of the original run).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Prune an untrained network by connection sensitivity.
    Prune(RunArgs),
    /// Train a network, optionally pruning it first.
    Train(RunArgs),
    /// Sweep initialization scale across depths and measure pruning outcomes.
    SweepGamma(RunArgs),
    /// Compare initialization schemes and saliency losses on one network.
    CompareInit(RunArgs),
    /// Measure input-output Jacobian spectra before and after pruning.
    Spectrum(RunArgs),
    /// Solve for the critical weight scale of a nonlinearity.
    Meanfield(RunArgs),
    /// Carve a small-budget subnetwork out of a larger architecture.
    Sculpt(RunArgs),
    /// Replay a manifest and verify the outputs match byte for byte.
    Report(ReportArgs),
}

fn run(kind: CommandKind, args: &RunArgs) -> Result<bool> {
    let config = Config::resolve(args.config.as_deref(), &args.overrides)?;
    run_command(kind, &config, &args.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Prune(args) => run(CommandKind::Prune, args),
        Command::Train(args) => run(CommandKind::Train, args),
        Command::SweepGamma(args) => run(CommandKind::SweepGamma, args),
        Command::CompareInit(args) => run(CommandKind::CompareInit, args),
        Command::Spectrum(args) => run(CommandKind::Spectrum, args),
        Command::Meanfield(args) => run(CommandKind::Meanfield, args),
        Command::Sculpt(args) => run(CommandKind::Sculpt, args),
        Command::Report(args) => cmd_report(&args.manifest, args.out.as_deref()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
