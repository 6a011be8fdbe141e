//! Config-file merging. Values from the file are turned back into flags and
//! appended to the command line wherever the user did not pass that flag,
//! so clap does all parsing and validation in one place.

use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

use crate::CliError;

pub fn merge(cmd: &Command, argv: Vec<OsString>, matches: &ArgMatches, path: &Path) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;

    let Some((sub_name, sub_matches)) = matches.subcommand() else {
        return Ok(argv);
    };
    let sub = cmd.find_subcommand(sub_name).expect("parsed subcommand exists");
    let mut extra = Vec::new();

    for (key, value) in &table {
        if let toml::Value::Table(section) = value {
            let Some(target) = cmd.find_subcommand(key) else {
                return Err(CliError::Usage(format!("config table [{key}] is not a command")));
            };
            if key != sub_name {
                continue;
            }
            for (k, v) in section {
                if !push_flag(target, sub_matches, k, v, &mut extra)? {
                    return Err(CliError::Usage(format!("config key {k:?} under [{key}] is not a flag of `{key}`")));
                }
            }
            continue;
        }
        if push_flag(sub, sub_matches, key, value, &mut extra)? {
            continue;
        }
        // a top-level key may belong to a command other than this one
        let known = cmd
            .get_subcommands()
            .any(|c| c.get_arguments().any(|a| a.get_id().as_str() == normalize(key)));
        if !known {
            return Err(CliError::Usage(format!("config key {key:?} is not a flag of any command")));
        }
    }
    let mut argv = argv;
    argv.extend(extra);
    Ok(argv)
}

fn normalize(key: &str) -> String {
    key.replace('-', "_")
}

/// Appends `--flag value` for a config entry unless the flag was given on
/// the command line. Returns false when `cmd` has no such flag.
fn push_flag(
    cmd: &Command,
    matches: &ArgMatches,
    key: &str,
    value: &toml::Value,
    out: &mut Vec<OsString>,
) -> Result<bool, CliError> {
    let id = normalize(key);
    let Some(arg) = cmd.get_arguments().find(|a| a.get_id().as_str() == id) else {
        return Ok(false);
    };
    let long = arg.get_long().expect("every flag has a long form");
    if id == "config" {
        return Err(CliError::Usage("config files cannot name another config file".into()));
    }
    if matches.value_source(&id) == Some(ValueSource::CommandLine) {
        return Ok(true);
    }
    let takes_value = arg.get_num_args().is_some_and(|n| n.takes_values());
    match value {
        toml::Value::Boolean(b) if !takes_value => {
            if *b {
                out.push(format!("--{long}").into());
            }
        }
        toml::Value::String(s) => out.push(format!("--{long}={s}").into()),
        toml::Value::Integer(i) => out.push(format!("--{long}={i}").into()),
        toml::Value::Float(f) => out.push(format!("--{long}={f}").into()),
        other => {
            return Err(CliError::Usage(format!(
                "config key {key:?}: unsupported value {other}"
            )))
        }
    }
    Ok(true)
}
