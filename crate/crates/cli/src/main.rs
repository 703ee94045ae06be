#![forbid(unsafe_code)]

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use commands::CliError;

fn configure_threads() -> Result<(), String> {
    let threads = match std::env::var("SILENTSPECIES_THREADS") {
        Ok(v) if v.trim().is_empty() => 0,
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("SILENTSPECIES_THREADS must be a non-negative integer, got {v:?}"))?,
        Err(_) => 0,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();

    let argv: Vec<String> = std::env::args().collect();
    let cli = match args::Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error[UsageError]: {msg}");
        return ExitCode::from(2);
    }
    match commands::run(cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Data(_) => ExitCode::from(1),
            }
        }
    }
}
