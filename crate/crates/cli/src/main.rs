mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::Cli;

fn error_line(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": kind, "message": message }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            error_line("config", &e.kind().to_string());
            return ExitCode::from(1);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_configuration() => {
            error_line("config", &e.to_string());
            ExitCode::from(1)
        }
        Err(e) => {
            error_line("runtime", &e.to_string());
            ExitCode::from(2)
        }
    }
}
