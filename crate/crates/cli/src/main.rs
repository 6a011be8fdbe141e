mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};
use commands::Globals;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or arguments; exit code 1.
    Usage(String),
    /// Input data or artifacts violate a contract; exit code 2.
    Data(String),
}

impl From<curricula::Error> for CliError {
    fn from(e: curricula::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

fn parse(argv: Vec<OsString>) -> Result<Cli, ExitCode> {
    let mut cmd = Cli::command();
    cmd.build();
    let fail = |e: clap::Error| {
        let _ = e.print();
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
            _ => ExitCode::from(1),
        }
    };
    let matches = cmd.clone().try_get_matches_from(&argv).map_err(fail)?;
    let argv = match matches.get_one::<std::path::PathBuf>("config") {
        Some(path) => config::merge(&cmd, argv, &matches, path).map_err(|e| report(&e))?,
        None => argv,
    };
    let matches = cmd.try_get_matches_from(&argv).map_err(fail)?;
    Cli::from_arg_matches(&matches).map_err(fail)
}

fn report(e: &CliError) -> ExitCode {
    match e {
        CliError::Usage(m) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        CliError::Data(m) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match parse(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    let g = Globals {
        seed: cli.seed,
        out_dir: cli.out_dir,
    };
    let result = match &cli.command {
        Command::Extract(a) => commands::extract(a, &g),
        Command::Train(a) => commands::train_cmd(a, &g),
        Command::Eval(a) => commands::eval(a, &g),
        Command::Filter(a) => commands::filter(a, &g),
        Command::Analyze(a) => commands::analyze(a, &g),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
