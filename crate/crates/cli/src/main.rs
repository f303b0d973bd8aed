use std::process::ExitCode;

use clap::Parser;
use sdfclust_cli::args::Cli;

fn main() -> ExitCode {
    match sdfclust_cli::run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
