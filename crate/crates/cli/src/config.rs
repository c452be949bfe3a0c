//! Flat `key=value` configuration files.
//!
//! Keys are long flag names, with `_` accepted for `-`. The file's entries
//! are spliced into the argument list right after the subcommand, so flags
//! given explicitly later on the command line override them. Keys that
//! name a flag of some other subcommand are skipped; keys no subcommand
//! knows are an error. Relative paths resolve against the file's directory.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::CommandFactory;

use crate::args::Cli;
use crate::UsageError;

/// Flags whose values are file system paths.
const PATH_KEYS: &[&str] = &[
    "streams",
    "documents",
    "frequencies",
    "distances",
    "stopwords",
    "expected",
    "intervals",
    "patterns",
    "index",
    "output",
    "timing",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str) -> Result<Vec<Entry>, UsageError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("config line {}: expected key=value", n + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(UsageError(format!("config line {}: empty key", n + 1)));
        }
        out.push(Entry {
            key,
            value: value.trim().to_owned(),
        });
    }
    Ok(out)
}

/// Renders entries in the format [`parse`] reads.
pub fn render(entries: &[Entry]) -> String {
    entries.iter().map(|e| format!("{}={}\n", e.key, e.value)).collect()
}

fn long_flags(cmd: &clap::Command) -> BTreeSet<String> {
    cmd.get_arguments()
        .filter_map(|a| a.get_long().map(str::to_owned))
        .collect()
}

/// Expands `--config FILE` into explicit flags for the chosen subcommand.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, UsageError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let entries = parse(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();

    let root = Cli::command();
    let Some((pos, sub)) = argv
        .iter()
        .enumerate()
        .skip(1)
        .find_map(|(i, a)| root.find_subcommand(a.to_str()?).map(|s| (i, s)))
    else {
        return Ok(argv);
    };
    let known: BTreeSet<String> = root.get_subcommands().flat_map(long_flags).collect();
    let own = long_flags(sub);

    let mut injected = Vec::new();
    for e in entries {
        if e.key == "config" || !known.contains(&e.key) {
            return Err(UsageError(format!("unknown config key `{}`", e.key)));
        }
        if !own.contains(&e.key) {
            continue;
        }
        let value = if PATH_KEYS.contains(&e.key.as_str()) {
            resolve(&base, &e.value).into_os_string()
        } else {
            OsString::from(e.value)
        };
        injected.push(OsString::from(format!("--{}", e.key)));
        injected.push(value);
    }
    let mut out = argv;
    out.splice(pos + 1..pos + 1, injected);
    Ok(out)
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = Path::new(value);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}
