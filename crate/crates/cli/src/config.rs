//! `key = value` settings merged from a config file and command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Every key the harness understands. Flags use the same names with `--`.
pub const KEYS: &[&str] = &[
    "problem",
    "dataset",
    "protected-col",
    "method",
    "alpha",
    "n",
    "M",
    "max-iters",
    "tol",
    "seed",
    "outdir",
    "eta-tracking",
    "dx",
    "dy",
    "mu",
    "L1",
    "lambda-reg",
    "gamma",
    "beta-reg",
    "scale",
    "timing",
    "eg-step",
    "correction",
    "synth-m",
    "synth-d",
    "synth-p",
    "synth-sep",
    "synth-protected",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut settings = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                bail!("line {}: unknown key '{key}'", i + 1);
            }
            settings.set(key, value.trim());
        }
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    /// Entries of `other` replace ours.
    pub fn overlay(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("invalid value '{s}' for key '{key}': {e}")),
        }
    }

    pub fn get_or<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require(&self, key: &str, why: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| anyhow!("missing required key '{key}' ({why})"))
    }

    /// Accepts `true/false`, `yes/no`, `on/off` and `1/0`.
    pub fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => match s.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => bail!("invalid value '{s}' for key '{key}': expected true or false"),
            },
        }
    }

    /// Comma separated list, empty items dropped.
    pub fn list<T>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let Some(s) = self.raw(key) else {
            return Ok(None);
        };
        s.split(',')
            .map(str::trim)
            .filter(|item| !item.is_empty())
            .map(|item| {
                item.parse()
                    .map_err(|e| anyhow!("invalid value '{item}' for key '{key}': {e}"))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }
}
