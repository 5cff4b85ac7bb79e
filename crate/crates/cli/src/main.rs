use std::process::ExitCode;

use clap::Parser;
use somkit_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("somkit: {e}");
            ExitCode::FAILURE
        }
    }
}
