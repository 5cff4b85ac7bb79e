//! Command-line front end for `somkit`: CSV ingestion, training runs persisted
//! as run directories, classification of new rows, reports and SVG views.
//!
//! A run directory holds `codebook.json`, `assignment.csv`, `report.txt`,
//! `superclasses.json` and `config.json`. It is written to a hidden sibling
//! first and renamed into place, so a failed run leaves nothing behind.

pub mod args;
pub mod classify;
pub mod config;
pub mod error;
pub mod ingest;
pub mod persist;
pub mod render;
pub mod report;
pub mod train;

use std::fs;

pub use args::{Cli, Command};
pub use config::{Algorithm, IterSpec, RunConfig};
pub use error::{CliError, Result};

/// Executes one parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    if let Some((alg, args)) = cli.command.algorithm() {
        let out = train::train_command(alg, args)?;
        println!("{}", out.display());
        return Ok(());
    }
    match &cli.command {
        Command::Classify(args) => {
            let records = classify::classify_command(args)?;
            let failed = records.iter().filter(|r| r.unit.is_none()).count();
            if failed > 0 {
                eprintln!("{failed} row(s) could not be classified");
            }
        }
        Command::Render(args) => {
            let out = render::render_command(args)?;
            println!("{}", out.display());
        }
        Command::Report(args) => {
            let path = args.run.join(persist::REPORT_FILE);
            if !path.exists() {
                return Err(CliError::MissingArtifact(path));
            }
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            print!("{text}");
        }
        _ => unreachable!("training commands handled above"),
    }
    Ok(())
}
