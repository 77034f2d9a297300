mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl From<wlcasimir::Error> for CliError {
    fn from(e: wlcasimir::Error) -> Self {
        use wlcasimir::Error::*;
        match e {
            InvalidParameter(_) | DimensionMismatch { .. } | FitRange(_) | MalformedInterval { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let workers = cli.workers;
    let job = move || match &cli.command {
        Command::GenLoops(a) => commands::gen_loops(a),
        Command::Energy(a) => commands::energy(a),
        Command::Scan(a) => commands::scan(a),
        Command::DensityMap(a) => commands::density_map(a),
        Command::PpEnergy(a) => commands::pp_energy(a),
        Command::PolymerMoment(a) => commands::polymer_moment(a),
        Command::Fit(a) => commands::fit(a),
        Command::Pfa(a) => commands::pfa_cmd(a),
        Command::PfaBounds(a) => commands::pfa_bounds(a),
    };
    wlcasimir::parallel::with_workers(workers, job)?
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let matches = Cli::command().args_override_self(true).get_matches_from(argv);
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
