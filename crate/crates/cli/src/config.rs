//! Merges a JSON config file into the command line as default flags.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{Map, Value};

const COMMANDS: [&str; 4] = ["unitcost", "simulate", "distribution", "supplycurve"];

/// Returns `args` with the flags of any `--config` file inserted right after the
/// subcommand, so explicit flags given later override them.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let Value::Object(mut map) = value else {
        bail!("config {} must hold a JSON object", path.display());
    };
    let command = map.remove("command");
    // explicit flags win; list flags would otherwise append to the file's values
    map.retain(|key, _| !given(&args, &flag_name(key)));
    let flags = flags_from(&map)?;

    let mut out = args;
    let at = match command_end(&out) {
        Some(i) => i,
        None => {
            let Some(cmd) = command else {
                bail!("no subcommand given on the command line or in {}", path.display());
            };
            for word in command_words(&cmd)? {
                out.push(word.into());
            }
            out.len()
        }
    };
    out.splice(at..at, flags);
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<std::path::PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(|p| Path::new(p).to_path_buf());
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Index just past the subcommand words, if the command line names one.
fn command_end(args: &[OsString]) -> Option<usize> {
    let i = args
        .iter()
        .position(|a| COMMANDS.contains(&a.to_string_lossy().as_ref()))?;
    if args[i] == "supplycurve" {
        let next = args.get(i + 1)?;
        if next.to_string_lossy().starts_with('-') {
            return None;
        }
        return Some(i + 2);
    }
    Some(i + 1)
}

fn command_words(cmd: &Value) -> Result<Vec<String>> {
    match cmd {
        Value::String(s) => Ok(s.split_whitespace().map(str::to_string).collect()),
        Value::Array(items) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| anyhow!("command words must be strings"))
            })
            .collect(),
        _ => bail!("\"command\" must be a string or a list of strings"),
    }
}

fn flag_name(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

fn given(args: &[OsString], flag: &str) -> bool {
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.strip_prefix(flag).is_some_and(|rest| rest.starts_with('='))
    })
}

fn flags_from(map: &Map<String, Value>) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (key, value) in map {
        if key == "config" {
            bail!("a config file cannot name another config file");
        }
        let flag = flag_name(key);
        match value {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_>>()?;
                out.push(format!("{flag}={}", parts.join(",")).into());
            }
            other => out.push(format!("{flag}={}", scalar(other)?).into()),
        }
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String> {
    match v {
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        _ => bail!("config value {v} is not a number or string"),
    }
}
