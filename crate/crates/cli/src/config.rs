//! `--config` files and criteria files.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, CommandFactory};
use rugguard_core::dataset::parse_manifest;
use rugguard_core::labeler::DeadTokenCriteria;
use rugguard_core::Decimal;
use serde::Deserialize;

use crate::args::Cli;
use crate::UsageError;

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn subcommand_name(argv: &[OsString]) -> Option<String> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            it.next();
        } else if !s.starts_with('-') {
            return Some(s.into_owned());
        }
    }
    None
}

/// Appends flags from the `--config` file that the command line leaves unset.
pub fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
    let entries = parse_manifest(&text).map_err(|e| anyhow!("config file {}: {e}", path.display()))?;
    // Without a valid subcommand clap reports the problem itself.
    let Some(sub) = subcommand_name(&argv) else {
        return Ok(argv);
    };
    let cmd = Cli::command();
    let Some(sub_cmd) = cmd.find_subcommand(&sub) else {
        return Ok(argv);
    };
    let given = |long: &str| {
        argv.iter().any(|a| {
            let a = a.to_string_lossy();
            a == format!("--{long}") || a.starts_with(&format!("--{long}="))
        })
    };
    let mut out = argv.clone();
    for (key, value) in entries {
        let long = key.replace('_', "-");
        let arg = sub_cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(long.as_str()) && long != "config")
            .ok_or_else(|| UsageError(format!("config key `{key}` is not a flag of `{sub}`")))?;
        if given(&long) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" => out.push(format!("--{long}").into()),
                "false" => {}
                other => bail!(UsageError(format!("config key `{key}` expects true or false, got `{other}`"))),
            }
        } else {
            out.push(format!("--{long}={value}").into());
        }
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CriteriaFile {
    liquidity_epsilon: Option<toml::Value>,
    activity_epsilon: Option<u64>,
    persistence_hours: Option<u32>,
    window_hours: Option<u32>,
    rugpull_lookback_hours: Option<u32>,
}

/// Reads a TOML criteria file; absent keys keep their defaults.
pub fn load_criteria(path: Option<&Path>) -> Result<DeadTokenCriteria> {
    let mut c = DeadTokenCriteria::default();
    let Some(path) = path else {
        return Ok(c);
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading criteria file {}", path.display()))?;
    let f: CriteriaFile = toml::from_str(&text).with_context(|| format!("criteria file {}", path.display()))?;
    if let Some(v) = f.liquidity_epsilon {
        let s = match v {
            toml::Value::String(s) => s,
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(x) => x.to_string(),
            other => bail!("liquidity_epsilon must be a number or decimal string, got {other}"),
        };
        c.liquidity_epsilon = s.parse::<Decimal>().with_context(|| format!("liquidity_epsilon `{s}`"))?;
    }
    c.activity_epsilon = f.activity_epsilon.unwrap_or(c.activity_epsilon);
    c.persistence_hours = f.persistence_hours.unwrap_or(c.persistence_hours);
    c.window_hours = f.window_hours.unwrap_or(c.window_hours);
    c.rugpull_lookback_hours = f.rugpull_lookback_hours.unwrap_or(c.rugpull_lookback_hours);
    c.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<OsString> {
        s.split_whitespace().map(OsString::from).collect()
    }

    #[test]
    fn command_line_wins_over_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        fs::write(&cfg, "# run\nseed=3\nrug_fraction=0.5\nhard-mode=true\n").unwrap();
        let a = argv(&format!("rugguard --config {} simulate --seed 9 --out x", cfg.display()));
        let merged: Vec<String> = merge_config(a).unwrap().iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert!(merged.contains(&"--rug-fraction=0.5".to_string()));
        assert!(merged.contains(&"--hard-mode".to_string()));
        assert!(!merged.iter().any(|s| s.starts_with("--seed=")));
    }

    #[test]
    fn unknown_config_key_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        fs::write(&cfg, "colour=blue\n").unwrap();
        let err = merge_config(argv(&format!("rugguard simulate --config={} --out x", cfg.display()))).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn criteria_file_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("criteria.toml");
        fs::write(&p, "persistence_hours = 96\nliquidity_epsilon = \"0.001\"\n").unwrap();
        let c = load_criteria(Some(&p)).unwrap();
        assert_eq!(c.persistence_hours, 96);
        assert_eq!(c.liquidity_epsilon, "0.001".parse::<Decimal>().unwrap());
        assert_eq!(c.window_hours, 1);
        fs::write(&p, "persistance_hours = 96\n").unwrap();
        assert!(load_criteria(Some(&p)).is_err());
    }
}
