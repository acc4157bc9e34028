use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irsa_bac::Execution;
use irsa_bac_cli::commands::{self, Outcome, Overrides};
use irsa_bac_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "irsa-bac", version, about = "IRSA over the binary adder channel: simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo packet loss rate over a load grid.
    Simulate(Common),
    /// Analytical curves: pmf, pi-u, regions, de or sum-rate.
    Analyze(Common),
    /// Density-evolution thresholds and sum rates over a beta grid.
    Threshold(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path; overrides `output`. Standard output when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    frames: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
}

fn run(cli: Cli) -> Result<Vec<String>, CliError> {
    let (common, kind) = match &cli.command {
        Command::Simulate(c) => (c, 0),
        Command::Analyze(c) => (c, 1),
        Command::Threshold(c) => (c, 2),
    };
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", common.config.display())))?;
    let cfg = RunConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", common.config.display())))?;
    let o = Overrides { seed: common.seed, frames: common.frames, tol: common.tol };
    let exec = match common.workers {
        Some(0) => return Err(CliError::Config("--workers must be at least 1".into())),
        Some(1) => Execution::Sequential,
        _ => Execution::Parallel,
    };
    let work = || match kind {
        0 => commands::simulate(&cfg, &o, exec),
        1 => commands::analyze(&cfg),
        _ => commands::threshold(&cfg, &o),
    };
    let Outcome { table, failures } = match common.workers {
        Some(n) if n > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(work)?,
        _ => work()?,
    };
    let written = match common.out.as_ref().or(cfg.output.as_ref()) {
        Some(path) => table.write_path(path),
        None => table.write_to(io::stdout().lock()),
    };
    written.map_err(|e| CliError::Runtime(format!("writing output: {e}")))?;
    Ok(failures)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in failures {
                eprintln!("irsa-bac: {f}");
            }
            ExitCode::from(irsa_bac_cli::EXIT_RUNTIME as u8)
        }
        Err(e) => {
            eprintln!("irsa-bac: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
