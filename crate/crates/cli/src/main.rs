//! `wavelab` command-line runner. Every command writes its table to `--out`
//! (or stdout) and, when `--out` is given, a run manifest next to it from
//! which `wavelab replay` reproduces the outputs.

mod commands;
mod manifest;
mod plot;

use std::process::ExitCode;

use clap::Parser;

use commands::Cli;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_FAILED_CHECKS: u8 = 1;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_VALIDATION) } else { ExitCode::SUCCESS };
        }
    };
    match commands::execute(cli, argv[1..].to_vec()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED_CHECKS),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<wavelab::Error>() {
        Some(err) if err.is_numeric() => EXIT_NUMERIC,
        _ => EXIT_VALIDATION,
    }
}
