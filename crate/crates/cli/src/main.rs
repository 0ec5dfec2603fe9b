mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use commands::Failure;
use config::{ConfigFile, RunConfig};

fn run(cli: &Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => ConfigFile::read(path)?,
        None => ConfigFile::default(),
    };
    let cfg = RunConfig::resolve(&file, &cli.overrides)?;
    commands::dispatch(cli.command, &cfg)
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors, matching config errors.
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("atlas {}: {}", cli.command.name(), f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
