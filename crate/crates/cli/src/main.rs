//! `crashlens`: ingest, synthesize, analyze and verify PTW crash records.
//!
//! Exit status is 0 on success, 1 when the data or an input file is at fault
//! and 2 for usage errors.

use std::process::ExitCode;

use clap::{ColorChoice, CommandFactory, FromArgMatches};
use crashlens_cli::{color_allowed, run, stdout_color, Cli};

fn main() -> ExitCode {
    let color = if color_allowed() { ColorChoice::Auto } else { ColorChoice::Never };
    let matches = Cli::command().color(color).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let stdout = std::io::stdout();
    match run(cli.command, &mut stdout.lock(), stdout_color()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
