//! `key=value` config files, spliced into the argument list ahead of the
//! command-line flags so that later flags override them.

use std::ffi::OsString;
use std::path::Path;

use crate::args::SUBCOMMANDS;

/// Parse `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
        let key = k.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        out.push((key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn as_flags(pairs: &[(String, String)]) -> Vec<OsString> {
    pairs
        .iter()
        .filter_map(|(k, v)| match v.as_str() {
            "true" => Some(format!("--{k}")),
            "false" => None,
            _ => Some(format!("--{k}={v}")),
        })
        .map(OsString::from)
        .collect()
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.to_str().and_then(|s| s.strip_prefix("--config=")) {
            return Some(p.into());
        }
    }
    None
}

/// Insert the flags from `--config FILE` right after the subcommand name.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config {}: {e}", Path::new(&path).display()))?;
    let flags = as_flags(&parse(&text)?);
    let Some(pos) = args.iter().position(|a| a.to_str().is_some_and(|s| SUBCOMMANDS.contains(&s))) else {
        return Ok(args);
    };
    let mut out = args[..=pos].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}
