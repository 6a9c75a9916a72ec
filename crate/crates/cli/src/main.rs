use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cascade_cli::{resolve_out_dir, run, Command, RunOptions, OUT_DIR_ENV};
use clap::{Args, Parser, Subcommand};

/// Simulate and optimize cascading decision overload.
#[derive(Parser)]
#[command(name = "cascade", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify a grid of gains and order rates for the two-component loop.
    DyadSweep(Common),
    /// Simulate each network topology and trace leaf stimulus propagation.
    NetSim(Common),
    /// Sweep collapse curves and stability envelopes for each topology.
    NetSweep(Common),
    /// Score the scenario's information structure.
    TeamSim(Common),
    /// Search for the best information structure.
    TeamOpt {
        #[command(flatten)]
        common: Common,
        /// Enumerate every structure instead of running the genetic algorithm.
        #[arg(long)]
        exhaustive: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, long_help = format!("Output directory; defaults to ${OUT_DIR_ENV}, then ./out"))]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (command, common, exhaustive) = match cli.command {
        Cmd::DyadSweep(c) => (Command::DyadSweep, c, false),
        Cmd::NetSim(c) => (Command::NetSim, c, false),
        Cmd::NetSweep(c) => (Command::NetSweep, c, false),
        Cmd::TeamSim(c) => (Command::TeamSim, c, false),
        Cmd::TeamOpt { common, exhaustive } => (Command::TeamOpt, common, exhaustive),
    };
    let opts = RunOptions {
        scenario: common.scenario,
        seed: common.seed,
        workers: common.workers,
        out_dir: resolve_out_dir(common.out),
        exhaustive,
    };
    match run(command, &opts) {
        Ok(outcome) => {
            // a closed stdout must not turn a finished run into a failure
            let mut out = std::io::stdout().lock();
            let _ = write!(out, "{}", outcome.summary);
            let _ = writeln!(out, "manifest: {}", outcome.manifest_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cascade {}: {e}", command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
