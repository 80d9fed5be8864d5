use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use spc_cli::{run, Cli, CliError};

fn fail(kind: &str, message: impl std::fmt::Display, code: u8) -> ExitCode {
    let message = message.to_string();
    let first = message
        .lines()
        .next()
        .unwrap_or_default()
        .trim_start_matches("error: ");
    eprintln!("error[{kind}]: {first}");
    for line in message.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        eprintln!("  {}", line.trim_end());
    }
    ExitCode::from(code)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("SPC_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| {
            CliError::usage(format!(
                "SPC_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot start {threads} threads: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.render(), 2),
    };
    if let Err(e) = configure_threads() {
        return fail(e.kind(), &e, e.exit_code() as u8);
    }
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e, e.exit_code() as u8),
    }
}
