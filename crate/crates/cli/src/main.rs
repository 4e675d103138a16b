use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ringform_cli::{run, ExperimentSpec, Verb};

#[derive(Parser)]
#[command(
    name = "ringform",
    version,
    about = "Reduced-attitude ring formation experiments"
)]
struct Cli {
    #[command(subcommand)]
    verb: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one closed-loop run.
    Simulate(Args),
    /// Run one simulation per seed and merge the results.
    Sweep(Args),
    /// Linearize an equispaced great-circle equilibrium.
    ClassifyEq(Args),
    /// Check the gap/distance bounds on random states.
    BoundAudit(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed in the config (the first seed for sweeps).
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (verb, args) = match cli.verb {
        Command::Simulate(a) => (Verb::Simulate, a),
        Command::Sweep(a) => (Verb::Sweep, a),
        Command::ClassifyEq(a) => (Verb::ClassifyEq, a),
        Command::BoundAudit(a) => (Verb::BoundAudit, a),
    };
    let result = ExperimentSpec::load(verb, &args.config, args.seed)
        .and_then(|spec| run(&spec, &args.out, args.quiet));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ringform: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
