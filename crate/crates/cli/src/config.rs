//! `key = value` configuration files, merged into the argument list so that
//! explicit flags win.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, CommandFactory};

use crate::args::Cli;
use crate::error::CliError;

pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected `key = value`", n + 1))
        })?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", n + 1)));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(tok) = it.next() {
        let s = tok.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

fn given(argv: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let prefix = format!("--{long}=");
    argv.iter().any(|t| {
        let s = t.to_string_lossy();
        s == flag || s.starts_with(&prefix)
    })
}

/// Appends config values for flags of the selected subcommand that are not
/// already on the command line. Keys belonging only to other subcommands are
/// skipped; keys no subcommand knows are rejected.
pub fn merge(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Data(format!("{}: {e}", Path::new(&path).display())))?;
    let pairs = parse(&text)?;

    let cli = Cli::command();
    let sub = argv
        .iter()
        .skip(1)
        .find_map(|t| cli.find_subcommand(t.to_string_lossy().as_ref()))
        .ok_or_else(|| CliError::Usage("missing subcommand".into()))?;
    let known_anywhere = |key: &str| {
        cli.get_subcommands()
            .any(|s| s.get_arguments().any(|a| a.get_long() == Some(key)))
    };

    let mut out = argv.clone();
    for (key, value) in pairs {
        if key == "config" {
            continue;
        }
        let Some(arg) = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
        else {
            if known_anywhere(&key) {
                continue;
            }
            return Err(CliError::Usage(format!("unknown config key {key:?}")));
        };
        if given(&argv, &key) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" | "1" | "yes" => out.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                _ => {
                    return Err(CliError::Usage(format!(
                        "config key {key}: expected a boolean"
                    )))
                }
            },
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let p = parse("# header\nseed = 4\n\nscale_spatial=2.5 # trailing\n").unwrap();
        assert_eq!(
            p,
            vec![
                ("seed".into(), "4".into()),
                ("scale-spatial".into(), "2.5".into())
            ]
        );
        assert!(parse("seed 4").is_err());
        assert!(parse(" = 4").is_err());
    }
}
