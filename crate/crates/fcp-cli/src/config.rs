//! Flat `key=value` configuration files.
//!
//! One setting per line; `#` starts a comment; blank lines are ignored.
//! Every key is also available as a command-line flag, and flags win over
//! file entries. Each command validates the file against its own key list so
//! misspelled settings fail loudly instead of silently using defaults.

use crate::Failure;
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self, Failure> {
        let mut entries = BTreeMap::new();
        let Some(path) = path else {
            return Ok(Config { entries });
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::Invalid(format!("cannot read config {}: {e}", path.display()))
        })?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Failure::Invalid(format!(
                    "{}:{}: expected key=value, got `{raw}`",
                    path.display(),
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            if !allowed.contains(&key.as_str()) {
                return Err(Failure::Invalid(format!(
                    "{}:{}: unknown key `{key}` (allowed: {})",
                    path.display(),
                    lineno + 1,
                    allowed.join(", ")
                )));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Failure::Invalid(format!(
                    "{}:{}: duplicate key `{key}`",
                    path.display(),
                    lineno + 1
                )));
            }
        }
        Ok(Config { entries })
    }

    /// Typed lookup; absent keys return `Ok(None)`.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                Failure::Invalid(format!("config key `{key}`: cannot parse `{raw}`: {e}"))
            }),
        }
    }

    /// Comma-separated list lookup.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, Failure>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(raw) => parse_list(raw)
                .map(Some)
                .map_err(|e| Failure::Invalid(format!("config key `{key}`: {e}"))),
        }
    }
}

/// Parses `a,b,c` into a vector, rejecting empty items.
pub fn parse_list<T: FromStr>(raw: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(|item| {
            let item = item.trim();
            if item.is_empty() {
                return Err("empty list item".to_string());
            }
            item.parse::<T>().map_err(|e| format!("cannot parse `{item}`: {e}"))
        })
        .collect()
}

/// `flag` wins over the config `file` value, which wins over `default`.
pub fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
