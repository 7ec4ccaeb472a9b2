mod cli;
mod commands;
mod config;
mod error;
mod output;
mod selfcheck;

use clap::Parser;
use std::process::ExitCode;

use cli::{Cli, Command};
use error::{CliError, CliResult};

/// Sizes the global worker pool from `STEPFLOW_THREADS`.
fn init_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("STEPFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("STEPFLOW_THREADS must be a positive integer (got `{value}`)")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    init_threads()?;
    match &cli.command {
        Command::Coeffs(a) => commands::coeffs(a),
        Command::Energy(a) => commands::energy(a),
        Command::Evolve(a) => commands::evolve(a),
        Command::ConvexityAudit(a) => commands::convexity_audit_cmd(a),
        Command::ScalingSweep(a) => commands::scaling_sweep(a),
        Command::TransitionScan(a) => commands::transition(a),
        Command::Profile(a) => commands::profile(a),
        Command::Selfcheck => match selfcheck::run() {
            0 => Ok(()),
            n => Err(CliError::Numerical(format!("selfcheck: {n} check(s) failed"))),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stepflow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
