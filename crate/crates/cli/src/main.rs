//! `jodscale` command-line tool.
//!
//! Exit codes: 0 on success, 1 when the data cannot be analysed, 2 for
//! unreadable input, malformed files and invalid options.

mod analysis;
mod args;
mod error;
mod report;
mod simulation;
mod svg;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};

fn run(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot start thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Scale(a) => analysis::cmd_scale(a),
        Command::Outliers(a) => analysis::cmd_outliers(a),
        Command::Simulate(a) => simulation::cmd_simulate(a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    // clap exits with 2 on usage errors, matching our input-error code
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
