mod args;
mod commands;
mod input;
mod report;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

const USAGE_ERROR: u8 = 3;

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("BLOCKASSOC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("BLOCKASSOC_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            anyhow::bail!("BLOCKASSOC_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE_ERROR),
            };
        }
    };
    let run = || -> anyhow::Result<u8> {
        configure_threads()?;
        let report = commands::dispatch(&cli.command)?;
        report.emit(cli.format, cli.output.as_deref())?;
        Ok(report.status.exit_code() as u8)
    };
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}
