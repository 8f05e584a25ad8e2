//! Config files as default flags.
//!
//! A config is a TOML table. Top-level keys apply to every subcommand that
//! has a flag of that name; a `[featurize]`, `[cv]`, ... section applies to
//! one subcommand only and must name real flags. Flags given on the command
//! line win over the file.

use std::collections::BTreeSet;
use std::ffi::OsString;

use anyhow::{bail, Context, Result};
use clap::Command;

const CONFIG_FLAG: &str = "config";

/// Returns `argv` with the config's flags spliced in after the subcommand
/// name, skipping any flag the user already passed.
pub fn expand(cmd: &Command, argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let Some(sub_pos) = args.iter().skip(1).position(|a| cmd.find_subcommand(a).is_some()).map(|p| p + 1) else {
        return Ok(argv);
    };
    let Some(config_path) = config_path(&args[sub_pos + 1..]) else {
        return Ok(argv);
    };
    let sub = cmd.find_subcommand(&args[sub_pos]).expect("found above");
    let text = std::fs::read_to_string(&config_path).with_context(|| format!("reading config {config_path}"))?;
    let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing config {config_path}"))?;

    let given = given_flags(&args[sub_pos + 1..]);
    let mut extra = Vec::new();
    for (key, value) in &table {
        if let toml::Value::Table(section) = value {
            if cmd.find_subcommand(key).is_none() {
                bail!("{config_path}: unknown section [{key}]");
            }
            if key == sub.get_name() {
                for (k, v) in section {
                    let flag = flag_name(k);
                    if !has_flag(sub, &flag) {
                        bail!("{config_path}: [{key}] has no flag --{flag}");
                    }
                    push_flag(sub, &flag, v, &given, &mut extra, &config_path)?;
                }
            }
            continue;
        }
        let flag = flag_name(key);
        if has_flag(sub, &flag) {
            push_flag(sub, &flag, value, &given, &mut extra, &config_path)?;
        }
    }

    let mut out: Vec<OsString> = argv[..=sub_pos].to_vec();
    out.extend(extra.into_iter().map(OsString::from));
    out.extend(argv[sub_pos + 1..].iter().cloned());
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
        if a == "--config" {
            return it.next().cloned();
        }
    }
    None
}

fn given_flags(args: &[String]) -> BTreeSet<String> {
    args.iter()
        .take_while(|a| *a != "--")
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect()
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn has_flag(sub: &Command, flag: &str) -> bool {
    flag != CONFIG_FLAG && sub.get_arguments().any(|a| a.get_long() == Some(flag))
}

fn push_flag(
    sub: &Command,
    flag: &str,
    value: &toml::Value,
    given: &BTreeSet<String>,
    out: &mut Vec<String>,
    config_path: &str,
) -> Result<()> {
    if given.contains(flag) {
        return Ok(());
    }
    let arg = sub.get_arguments().find(|a| a.get_long() == Some(flag)).expect("checked by caller");
    if !arg.get_action().takes_values() {
        match value {
            toml::Value::Boolean(true) => out.push(format!("--{flag}")),
            toml::Value::Boolean(false) => {}
            other => bail!("{config_path}: --{flag} is a switch, expected true or false, got {other}"),
        }
        return Ok(());
    }
    let items: Vec<&toml::Value> = match value {
        toml::Value::Array(items) => items.iter().collect(),
        single => vec![single],
    };
    for item in items {
        out.push(format!("--{flag}"));
        out.push(scalar(item).with_context(|| format!("{config_path}: value of --{flag}"))?);
    }
    Ok(())
}

fn scalar(value: &toml::Value) -> Result<String> {
    Ok(match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => format!("{f:?}"),
        toml::Value::Boolean(b) => b.to_string(),
        other => bail!("unsupported value {other}"),
    })
}
