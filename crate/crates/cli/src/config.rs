//! Flat `key = value` run configuration merged with command-line flags.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde_json::Value;

pub const CONFIG_ENV: &str = "COVSENSE_CONFIG";

#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Values from the config file plus every value resolved so far.
#[derive(Debug, Default)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    seen: BTreeSet<String>,
    resolved: BTreeMap<String, Value>,
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(usage(format!("config line {}: empty key", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(usage(format!("config key {k} given twice")));
        }
    }
    Ok(out)
}

impl Resolver {
    /// Reads `path`, or the file named by `COVSENSE_CONFIG` when no path is
    /// given.
    pub fn load(path: Option<&Path>) -> Result<Self, UsageError> {
        let path = match path {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from),
        };
        let Some(path) = path else {
            return Ok(Resolver::default());
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        Ok(Resolver {
            file: parse_config(&text)?,
            ..Resolver::default()
        })
    }

    fn lookup(&mut self, key: &str) -> Option<String> {
        self.seen.insert(key.to_string());
        self.file.get(key).cloned()
    }

    /// Marks a key as valid for the current command without resolving it.
    pub fn allow(&mut self, key: &str) {
        self.seen.insert(key.to_string());
    }

    fn record(&mut self, key: &str, v: Value) {
        self.resolved.insert(key.to_string(), v);
    }

    pub fn opt_f64(&mut self, key: &str, flag: Option<f64>) -> Result<Option<f64>, UsageError> {
        let file = self.lookup(key);
        let v = match (flag, file) {
            (Some(v), _) => Some(v),
            (None, Some(s)) => Some(
                s.parse::<f64>()
                    .map_err(|_| usage(format!("config key {key}: '{s}' is not a number")))?,
            ),
            (None, None) => None,
        };
        if let Some(x) = v {
            self.record(key, Value::from(x));
        }
        Ok(v)
    }

    pub fn f64(
        &mut self,
        key: &str,
        flag: Option<f64>,
        default: Option<f64>,
    ) -> Result<f64, UsageError> {
        match self.opt_f64(key, flag)? {
            Some(v) => Ok(v),
            None => {
                let v = default
                    .ok_or_else(|| usage(format!("missing --{key} (flag or config key)")))?;
                self.record(key, Value::from(v));
                Ok(v)
            }
        }
    }

    /// Non-negative integer that may be written in float notation, e.g. `1e6`.
    pub fn opt_count(&mut self, key: &str, flag: Option<&str>) -> Result<Option<u64>, UsageError> {
        let file = self.lookup(key);
        let Some(s) = flag.map(str::to_string).or(file) else {
            return Ok(None);
        };
        let n = parse_count(&s)
            .ok_or_else(|| usage(format!("--{key}: '{s}' is not a non-negative integer")))?;
        self.record(key, Value::from(n));
        Ok(Some(n))
    }

    pub fn count(
        &mut self,
        key: &str,
        flag: Option<&str>,
        default: Option<u64>,
    ) -> Result<u64, UsageError> {
        match self.opt_count(key, flag)? {
            Some(n) => Ok(n),
            None => {
                let n = default
                    .ok_or_else(|| usage(format!("missing --{key} (flag or config key)")))?;
                self.record(key, Value::from(n));
                Ok(n)
            }
        }
    }

    pub fn choice<T: ValueEnum + Clone>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, UsageError> {
        let file = self.lookup(key);
        let v = match (flag, file) {
            (Some(v), _) => v,
            (None, Some(s)) => T::from_str(&s, false)
                .map_err(|_| usage(format!("config key {key}: invalid value '{s}'")))?,
            (None, None) => default,
        };
        let name = v
            .to_possible_value()
            .map(|p| p.get_name().to_string())
            .unwrap_or_default();
        self.record(key, Value::from(name));
        Ok(v)
    }

    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool, UsageError> {
        let file = self.lookup(key);
        let v = if flag {
            true
        } else {
            match file.as_deref() {
                None => false,
                Some("true") => true,
                Some("false") => false,
                Some(s) => {
                    return Err(usage(format!(
                        "config key {key}: expected true or false, got '{s}'"
                    )))
                }
            }
        };
        self.record(key, Value::from(v));
        Ok(v)
    }

    /// Rejects config keys the command does not understand and returns the
    /// resolved configuration.
    pub fn finish(self) -> Result<BTreeMap<String, Value>, UsageError> {
        let unknown: Vec<&String> = self
            .file
            .keys()
            .filter(|k| !self.seen.contains(*k))
            .collect();
        if !unknown.is_empty() {
            return Err(usage(format!(
                "unknown config keys for this command: {}",
                unknown
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        Ok(self.resolved)
    }
}

pub fn parse_count(s: &str) -> Option<u64> {
    if let Ok(n) = s.parse::<u64>() {
        return Some(n);
    }
    let x: f64 = s.parse().ok()?;
    if x >= 0.0 && x.fract() == 0.0 && x <= 9_007_199_254_740_992.0 {
        Some(x as u64)
    } else {
        None
    }
}
