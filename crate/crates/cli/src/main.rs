//! `meanfield` command-line tool. Every command prints one JSON document.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use meanfield::Error;

use commands::Command;

#[derive(Parser, Debug)]
#[command(name = "meanfield", version, about = "Product-state estimates for local Hamiltonians")]
struct Cli {
    /// Worker threads (default: all cores). With 1 thread, output is reproducible bit for bit.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SizeLimit { .. } | Error::EnumerationCap { .. } => 3,
        Error::Internal(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Parameter("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    }
    let doc = commands::dispatch(&cli.command, cli.seed)?;
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand | ErrorKind::MissingSubcommand | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 1,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
