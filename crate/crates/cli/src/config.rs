//! Layered run configuration: embedded defaults, then a flat `key = value`
//! file, then command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Keys understood by some subcommand. A file may set any of them; each
/// subcommand reads the ones it needs.
pub const KNOWN_KEYS: &[&str] = &[
    "out-dir", "jobs", "seed", "p", "r", "chi", "grid", "box", "dt", "tol", "max-iter", "init", "method", "cutoff",
    "r-list", "in", "out", "t-final", "perturb", "sample-every", "trap", "checks", "gn-corpus", "rearrange-corpus",
    "stability-t",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn from_defaults(defaults: &[(&str, &str)]) -> Self {
        let mut c = Self::default();
        for (k, v) in defaults {
            c.values.insert((*k).to_string(), (*v).to_string());
        }
        c
    }

    /// Blank lines and `#` comments are ignored.
    pub fn parse_file_text(text: &str) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value, got {raw:?}", n + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                bail!("line {}: unknown key {k:?}", n + 1);
            }
            out.push((k.to_string(), v.to_string()));
        }
        Ok(out)
    }

    /// Overlays a file on top of the current values, keeping only keys that
    /// this subcommand uses.
    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        for (k, v) in Self::parse_file_text(&text)? {
            if self.values.contains_key(&k) {
                self.values.insert(k, v);
            }
        }
        Ok(())
    }

    pub fn merge_flags(&mut self, flags: Vec<(&'static str, Option<String>)>) {
        for (k, v) in flags {
            if let Some(v) = v {
                self.values.insert(k.to_string(), v);
            }
        }
    }

    pub fn raw(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| anyhow!("missing setting {key:?}"))
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.values.get(key).is_some_and(|v| !v.is_empty())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key)?;
        raw.parse().map_err(|e| anyhow!("setting {key} = {raw:?}: {e}"))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key)?;
        raw.split(',')
            .map(|s| s.trim().parse().map_err(|e| anyhow!("setting {key} = {raw:?}: {e}")))
            .collect()
    }

    pub fn triple<T: FromStr + Copy>(&self, key: &str) -> Result<[T; 3]>
    where
        T::Err: std::fmt::Display,
    {
        let v: Vec<T> = self.list(key)?;
        <[T; 3]>::try_from(v).map_err(|v| anyhow!("setting {key} needs three entries, got {}", v.len()))
    }

    /// `key = value` lines in key order.
    pub fn render(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
