//! `key = value` run files.
//!
//! A file is spliced into argv as `--key value` pairs right after the
//! subcommand, so anything given on the command line still wins (the parser
//! keeps the last occurrence of a flag).

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

pub fn parse_file(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected `key = value`, got `{raw}`", path.display(), i + 1);
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            bail!("{}:{}: empty key", path.display(), i + 1);
        }
        out.push((k.replace('_', "-"), v.to_string()));
    }
    Ok(out)
}

/// Finds `--config <path>` / `--config=<path>` in raw argv.
fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Returns argv with the config file (if any) expanded in place.
pub fn expand_args(cmd: &Command, args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let Some(sub) = args.get(1).and_then(|name| cmd.find_subcommand(name)) else {
        // Let the parser report the missing or unknown subcommand.
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
    let known: BTreeSet<&str> =
        sub.get_arguments().filter_map(|a| a.get_long()).filter(|l| *l != "config").collect();
    let mut spliced = Vec::new();
    for (key, value) in parse_file(&text, path)? {
        if key == "config" {
            bail!("{}: config files cannot include other config files", path.display());
        }
        if !known.contains(key.as_str()) {
            bail!(
                "{}: unknown key `{key}` for `{}`; valid keys: {}",
                path.display(),
                sub.get_name(),
                known.iter().copied().collect::<Vec<_>>().join(", ")
            );
        }
        spliced.push(format!("--{key}"));
        spliced.push(value);
    }
    let mut out = args[..2].to_vec();
    out.extend(spliced);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

/// Renders every resolved setting of a subcommand as a run file that
/// reproduces it; `out` and `config` are left out.
pub fn render(sub: &Command, m: &ArgMatches) -> String {
    let mut s = format!("# compass {}\n", sub.get_name());
    for arg in sub.get_arguments() {
        let id = arg.get_id().as_str();
        let Some(long) = arg.get_long() else { continue };
        if matches!(long, "out" | "config" | "help") {
            continue;
        }
        let Ok(Some(vals)) = m.try_get_raw(id) else {
            continue;
        };
        let vals: Vec<String> = vals.map(|v| v.to_string_lossy().into_owned()).collect();
        if vals.is_empty() {
            continue;
        }
        let from = match m.value_source(id) {
            Some(ValueSource::DefaultValue) => "  # default",
            _ => "",
        };
        s.push_str(&format!("{long} = {}{from}\n", vals.join(",")));
    }
    s
}
