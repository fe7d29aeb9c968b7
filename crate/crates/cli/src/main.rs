mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use asis_core::Error;
use clap::Parser;

use args::{Cli, Command};

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. }
        | Error::Validation(_)
        | Error::InvalidParams(_)
        | Error::StateSpaceTooLarge { .. }
        | Error::Io(_)
        | Error::Json(_) => 2,
        Error::Convergence { .. } | Error::Infeasible(_) | Error::Solver(_) => 3,
        Error::Timeout { .. } => 4,
    }
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(argv);
    let result = match &cli.command {
        Command::Generate { model } => commands::generate(model),
        Command::Threshold(a) => commands::threshold(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Metastable(a) => commands::metastable(a),
        Command::Sweep(a) => commands::sweep_cmd(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Centrality(a) => commands::centrality(a),
        Command::Oracle(a) => commands::oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
