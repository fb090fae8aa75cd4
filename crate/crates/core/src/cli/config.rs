//! Plain `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are skipped. Keys use the long
//! flag names (`t-end`, `newton-tol`, ...); `_` is accepted in place of `-`.
//! Lists are comma separated. A run manifest is itself a valid config file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{QgError, Result};

/// Every key a config file may carry.
pub const KNOWN_KEYS: &[&str] = &[
    "version",
    "command",
    "out",
    "threads",
    "seed",
    "nu",
    "mu",
    "nx",
    "ny",
    "dt",
    "t-end",
    "newton-tol",
    "newton-max-iter",
    "linear-solver",
    "x0",
    "x1",
    "y0",
    "y1",
    "forcing",
    "initial",
    "levels",
    "dts",
    "band",
    "nu-sweep",
    "mu-sweep",
    "window",
    "steady-window",
    "steady-tol",
    "member-dt",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QgError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(QgError::Config(format!("config line {}: expected key = value", lineno + 1)));
            };
            let key = k.trim().replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(QgError::Config(format!("config line {}: unknown key '{key}'", lineno + 1)));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(QgError::Config(format!("config line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| QgError::Config(format!("config key '{key}': cannot parse '{v}'")))
            })
            .transpose()
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim().parse().map_err(|_| {
                            QgError::Config(format!("config key '{key}': cannot parse list item '{item}'"))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    /// Flag value if given, else the file value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn pick_list<T: FromStr>(&self, flag: &[T], key: &str) -> Result<Option<Vec<T>>>
    where
        T: Clone,
    {
        if flag.is_empty() {
            self.get_list(key)
        } else {
            Ok(Some(flag.to_vec()))
        }
    }
}
