//! `taippg`: facial BPA analysis, synthetic fixtures, choroidal thickness
//! maps and study statistics from one entry point.

mod commands;
mod error;
mod output;

use clap::{Parser, Subcommand};
use error::CliError;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "taippg", version, about = "Region-resolved facial imaging photoplethysmography")]
struct Cli {
    /// Report failures as one JSON object on stderr.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Video and landmarks to BPA map and regional indicators.
    Analyze(commands::analyze::Args),
    /// Write a synthetic video with its landmarks and ground truth.
    Synth(commands::synth::Args),
    /// Indicator table to regressions, classification and ROC.
    Study(commands::study::Args),
    /// Boundary surfaces to thickness maps and mean thickness.
    Ct(commands::ct::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<(), CliError> = match cli.command {
        Command::Analyze(a) => commands::analyze::run(a),
        Command::Synth(a) => commands::synth::run(a),
        Command::Study(a) => commands::study::run(a),
        Command::Ct(a) => commands::ct::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if cli.json_errors {
                eprintln!("{}", e.to_json());
            } else {
                eprintln!("error [{}]: {}", e.kind, e.message);
            }
            ExitCode::from(e.exit_code as u8)
        }
    }
}
