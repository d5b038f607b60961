mod args;
mod commands;
mod summary;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

fn run(cli: Cli) -> f2s_core::Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| f2s_core::F2sError::config(format!("cannot start {n} threads: {e}")))?;
    }
    match &cli.command {
        Command::Synth(a) => commands::synth(a)?,
        Command::ExtractHsv(a) => commands::extract_hsv(a)?,
        Command::ExtractSharp(a) => commands::extract_sharp(a)?,
        Command::Train(a) => commands::train(a)?,
        Command::Eval(a) => commands::eval(a)?,
        Command::Ablate(a) => commands::ablate(a)?,
        Command::Inspect(a) => commands::inspect_cmd(a)?,
        Command::Gradcheck(a) => return commands::gradcheck(a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(true)) => ExitCode::SUCCESS,
        Ok(Ok(false)) => ExitCode::from(2),
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 1 } else { 2 })
        }
        Err(_) => ExitCode::from(2),
    }
}
