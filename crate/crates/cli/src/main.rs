mod cli;
mod commands;
mod error;
mod report;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use cli::{Cli, Command};
use error::{CliError, CliResult};
use run::RunContext;

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot start {t} worker threads: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let mut ctx = RunContext::new(&cli.global, &cli.command)?;
    configure_threads(ctx.config.threads)?;
    let summary = match cli.command {
        Command::Sample => commands::sample(&mut ctx)?,
        Command::Overlap { .. } => commands::overlap(&mut ctx)?,
        Command::Birthday { .. } => commands::birthday(&mut ctx)?,
        Command::FitPle { .. } => commands::fit_ple(&mut ctx)?,
        Command::Protocol => commands::protocol(&mut ctx)?,
        Command::Spatial { .. } => commands::spatial(&mut ctx)?,
        Command::Report => report::report(&ctx.out_dir)?,
    };
    let line = serde_json::to_string(&summary).map_err(CliError::from)?;
    // a closed pipe on stdout is not an error; the files are already written
    let _ = writeln!(std::io::stdout().lock(), "{line}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json_line());
            return ExitCode::from(err.code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.code as u8)
        }
    }
}
