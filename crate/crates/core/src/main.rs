use std::process::ExitCode;

use clap::Parser;
use steerwork::cli::{execute, exit_code, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match execute(&cli.command) {
        Ok(outcome) => outcome,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(exit_code(&err) as u8);
        }
    };
    match &cli.command.output().out {
        Some(path) => {
            if let Err(err) = std::fs::write(path, &outcome.output) {
                eprintln!("error: cannot write {}: {err}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{}", outcome.output),
    }
    ExitCode::from(outcome.exit_code as u8)
}
