use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fireline_cli::{execute, CliError, Command, Config, RunOptions};

#[derive(Parser)]
#[command(name = "fireline", version, about = "Forest fire process simulations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the discrete process on a box.
    SimulateLattice(Common),
    /// Run the limit process and export its timeline.
    SimulateLimit(Common),
    /// Coupled lattice/limit runs over a grid of lambda values.
    Couple(Common),
    /// Monte Carlo estimators.
    Stats(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Run full invariant scans while simulating.
    #[arg(long)]
    verify: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, common) = match cli.command {
        Cmd::SimulateLattice(c) => (Command::SimulateLattice, c),
        Cmd::SimulateLimit(c) => (Command::SimulateLimit, c),
        Cmd::Couple(c) => (Command::Couple, c),
        Cmd::Stats(c) => (Command::Stats, c),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let seed_override = match std::env::var("FIRELINE_SEED") {
        Ok(v) => Some(
            v.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("FIRELINE_SEED must be an unsigned integer, got `{v}`")))?,
        ),
        Err(_) => None,
    };
    let cfg = Config::load(&common.config)?;
    let opts = RunOptions {
        out: common.out,
        verify: common.verify,
        seed_override,
    };
    execute(command, cfg, &opts)?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
