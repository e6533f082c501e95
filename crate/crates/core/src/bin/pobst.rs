use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pobstacle::cli;

/// Obstacle problem solver and verification harness for the evolutionary
/// p-Laplace equation.
#[derive(Parser)]
#[command(name = "pobst", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write the trajectory.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve and run the enabled checks on every refinement level.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Epsilon and grid-refinement studies.
    Convergence {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo checks of the vector inequalities.
    Ineq {
        #[arg(long, default_value_t = 1_000_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Exchange both sides of every inequality (must fail).
        #[arg(long)]
        debug_swap: bool,
    },
}

fn main() -> ExitCode {
    let args = match Cli::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() {
                cli::EXIT_INPUT
            } else {
                cli::EXIT_OK
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match args.command {
        Command::Solve { scenario, out } => cli::cmd_solve(&scenario, &out),
        Command::Verify { scenario, out } => cli::cmd_verify(&scenario, &out),
        Command::Convergence { scenario, out } => cli::cmd_convergence(&scenario, &out),
        Command::Ineq {
            trials,
            seed,
            debug_swap,
        } => cli::cmd_ineq(trials, seed, debug_swap),
    };
    ExitCode::from(code as u8)
}
