//! Flat `key = value` run configuration.
//!
//! The format is one assignment per line with `#` comments; section
//! structure is expressed with dotted keys (`flow.steps = 100`), never
//! with nesting. Inline overrides on the command line use the same
//! `key=value` syntax and take precedence over the file.
//!
//! Every getter records the resolved value (provided or default), so
//! the echo written next to the artifacts lists the effective
//! configuration, not just the keys the user happened to set.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;

use crate::errors::{CliError, CliResult};

/// Ordered key/value store with access tracking.
#[derive(Debug, Default)]
pub struct RunConfig {
    entries: Vec<(String, String)>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl RunConfig {
    /// Parses a configuration file; reports malformed lines with their
    /// line number.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{}:{}: expected `key = value`, found {line:?}",
                    path.display(),
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(CliError::Config(format!(
                    "{}:{}: empty key",
                    path.display(),
                    lineno + 1
                )));
            }
            cfg.set(key, value);
        }
        Ok(cfg)
    }

    /// Applies inline `key=value` overrides.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> CliResult<()> {
        for item in overrides {
            let Some((key, value)) = item.split_once('=') else {
                return Err(CliError::Config(format!(
                    "override {item:?} is not of the form key=value"
                )));
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(CliError::Config(format!("override {item:?} has an empty key")));
            }
            self.set(key, value.trim());
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) {
        if let Some(slot) = self.entries.iter_mut().find(|(k, _)| k == key) {
            slot.1 = value.to_string();
        } else {
            self.entries.push((key.to_string(), value.to_string()));
        }
    }

    /// Rejects any key not in `allowed`, naming the offender.
    pub fn validate_keys(&self, allowed: &[&str]) -> CliResult<()> {
        for (key, _) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown configuration key '{key}' (valid keys: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn record(&self, key: &str, value: impl Display) {
        self.resolved
            .borrow_mut()
            .insert(key.to_string(), value.to_string());
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> CliResult<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => match v.parse::<T>() {
                Ok(x) => {
                    self.record(key, v);
                    Ok(Some(x))
                }
                Err(_) => Err(CliError::Config(format!(
                    "key '{key}': cannot parse {v:?} as {what}"
                ))),
            },
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> CliResult<usize> {
        Ok(self.parse::<usize>(key, "an unsigned integer")?.unwrap_or_else(|| {
            self.record(key, default);
            default
        }))
    }

    pub fn require_usize(&self, key: &str) -> CliResult<usize> {
        self.parse::<usize>(key, "an unsigned integer")?
            .ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))
    }

    pub fn i64_or(&self, key: &str, default: i64) -> CliResult<i64> {
        Ok(self.parse::<i64>(key, "an integer")?.unwrap_or_else(|| {
            self.record(key, default);
            default
        }))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> CliResult<u64> {
        Ok(self.parse::<u64>(key, "an unsigned integer")?.unwrap_or_else(|| {
            self.record(key, default);
            default
        }))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.parse::<f64>(key, "a number")?.unwrap_or_else(|| {
            self.record(key, default);
            default
        }))
    }

    pub fn f64_opt(&self, key: &str) -> CliResult<Option<f64>> {
        self.parse::<f64>(key, "a number")
    }

    pub fn bool_or(&self, key: &str, default: bool) -> CliResult<bool> {
        match self.raw(key) {
            None => {
                self.record(key, default);
                Ok(default)
            }
            Some("true") => {
                self.record(key, "true");
                Ok(true)
            }
            Some("false") => {
                self.record(key, "false");
                Ok(false)
            }
            Some(v) => Err(CliError::Config(format!(
                "key '{key}': expected true or false, found {v:?}"
            ))),
        }
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        let v = self.raw(key).unwrap_or(default).to_string();
        self.record(key, &v);
        v
    }

    pub fn str_opt(&self, key: &str) -> Option<String> {
        let v = self.raw(key).map(str::to_string);
        if let Some(ref s) = v {
            self.record(key, s);
        }
        v
    }

    /// Comma-separated signed integers, e.g. `scenario.k = 1,0,-2`.
    pub fn i64_list_or(&self, key: &str, default: &[i64]) -> CliResult<Vec<i64>> {
        match self.raw(key) {
            None => {
                self.record(
                    key,
                    default
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                );
                Ok(default.to_vec())
            }
            Some(v) => {
                let mut out = Vec::new();
                for part in v.split(',') {
                    out.push(part.trim().parse::<i64>().map_err(|_| {
                        CliError::Config(format!(
                            "key '{key}': cannot parse {part:?} as an integer"
                        ))
                    })?);
                }
                self.record(key, v);
                Ok(out)
            }
        }
    }

    /// The effective configuration as a sorted map.
    pub fn resolved_map(&self) -> BTreeMap<String, String> {
        self.resolved.borrow().clone()
    }

    /// The effective configuration: every key consulted so far with the
    /// value actually used, sorted, one `key = value` line each.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.resolved.borrow().iter() {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

/// Keys shared by every subcommand.
pub const COMMON_KEYS: &[&str] = &[
    "n",
    "size",
    "length",
    "fd_order",
    "seed",
    "scenario",
    "scenario.amplitude",
    "scenario.max_k",
    "scenario.k",
];

pub const FLOW_KEYS: &[&str] = &[
    "flow.scheme",
    "flow.steps",
    "flow.dt",
    "flow.cfl",
    "flow.gauge",
    "flow.s",
    "flow.snapshot_every",
    "flow.bianchi_every",
    "flow.min_metric_eig",
    "flow.max_q_inf",
    "flow.max_halvings",
];

pub const GRADCHECK_KEYS: &[&str] = &[
    "gradcheck.directions",
    "gradcheck.eps",
    "gradcheck.s",
    "gradcheck.grad_tol",
    "gradcheck.bianchi_tol",
    "gradcheck.hessian_tol",
];

pub const SYMBOL_KEYS: &[&str] = &["symbol.trials", "symbol.s", "symbol.gauged"];

pub const G2_KEYS: &[&str] = &["g2.snapshot", "g2.fail_above"];

pub const ORACLE_KEYS: &[&str] = &[
    "oracle.points",
    "oracle.metric_amp",
    "oracle.spinor_amp",
    "oracle.max_k",
    "oracle.waves",
];
