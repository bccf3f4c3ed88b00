//! Flat `key=value` experiment configs with dotted namespaces, and the run
//! manifest that records them.
//!
//! ```text
//! # P0 with a finer step
//! model.theta = 10
//! sim.c_step = 0.002
//! run.seed = 7
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use bdlab_core::sim::SimConfig;
use bdlab_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_H_MAX: f64 = 0.05;
pub const DEFAULT_C_STEP: f64 = 0.01;
pub const DEFAULT_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.split('.').all(|seg| {
            !seg.is_empty() && seg.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        })
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LabError::config(format!("line {}: expected key=value", n + 1)))?;
            cfg.set(k.trim(), v.trim()).map_err(|e| LabError::config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !valid_key(key) {
            return Err(LabError::config(format!("invalid key `{key}`")));
        }
        self.entries.insert(key.to_owned(), value.into());
        Ok(())
    }

    /// Sets `key` only when absent.
    pub fn set_default(&mut self, key: &str, value: impl Into<String>) {
        self.entries.entry(key.to_owned()).or_insert_with(|| value.into());
    }

    /// Entries of `other` override entries of `self`.
    pub fn merge(&mut self, other: &Config) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_f64(v).ok_or_else(|| LabError::config(format!("{key}: `{v}` is not a number"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| LabError::config(format!("{key}: `{v}` is not an unsigned integer"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.u64_or(key, default as u64)? as usize)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    /// A grid given as `lo:hi:step` or as a comma list; `default` when absent.
    pub fn grid_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_grid(v).map_err(|e| LabError::config(format!("{key}: {e}"))),
        }
    }

    /// Model constants from `model.*`, P0 for missing entries.
    pub fn params(&self) -> Result<ModelParams> {
        let p0 = ModelParams::p0();
        Ok(ModelParams::new(
            self.f64_or("model.theta", p0.theta())?,
            self.f64_or("model.a", p0.a())?,
            self.f64_or("model.r", p0.r())?,
            self.f64_or("model.rho", p0.rho())?,
        )?)
    }

    pub fn seed(&self) -> Result<u64> {
        self.u64_or("run.seed", DEFAULT_SEED)
    }

    /// Simulator settings from `sim.*` with the given horizon and snapshots.
    pub fn sim_config(&self, horizon: f64, snapshots: Vec<f64>) -> Result<SimConfig> {
        let cfg = SimConfig::new(
            self.f64_or("sim.h_max", DEFAULT_H_MAX)?,
            self.f64_or("sim.c_step", DEFAULT_C_STEP)?,
            self.usize_or("sim.cap", DEFAULT_CAP)?,
            horizon,
            self.seed()?,
        )?;
        Ok(cfg.with_snapshots(snapshots)?)
    }

    /// The config as `key=value` lines in key order; parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

/// Accepts ordinary decimals plus `inf`, `-inf` and `nan`.
pub fn parse_f64(v: &str) -> Option<f64> {
    v.trim().parse::<f64>().ok()
}

pub fn parse_grid(v: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts.iter().map(|s| parse_f64(s)).collect::<Option<_>>().ok_or("bad range")?;
        let (lo, hi, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || hi < lo {
            return Err("range needs lo <= hi and a positive step".into());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| lo + step * i as f64).collect());
    }
    v.split(',').map(|s| parse_f64(s).ok_or_else(|| format!("`{s}` is not a number"))).collect()
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: Config,
    pub seed: u64,
    pub workers: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub truncated_replicas: usize,
    pub status: i32,
}

impl Manifest {
    pub fn new(command: &str, config: &Config) -> Result<Self> {
        Ok(Self {
            command: command.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config: config.clone(),
            seed: config.seed()?,
            workers: crate::runner::worker_count(),
            wall_time_s: 0.0,
            outputs: Vec::new(),
            truncated_replicas: 0,
            status: 0,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| LabError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let text = "# comment\nmodel.theta = 12\n\nsim.c_step=0.002  # finer\nrun.seed=5\n";
        let c = Config::parse(text).unwrap();
        assert_eq!(c.f64_or("model.theta", 0.0).unwrap(), 12.0);
        assert_eq!(c.f64_or("model.a", 1.5).unwrap(), 1.5);
        assert_eq!(c.seed().unwrap(), 5);
        assert_eq!(Config::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("model.theta").is_err());
        assert!(Config::parse("Model.Theta=1").is_err());
        assert!(Config::parse("a..b=1").is_err());
        let c = Config::parse("model.theta=abc").unwrap();
        assert!(c.params().is_err());
    }

    #[test]
    fn merge_overrides() {
        let mut base = Config::parse("a.b=1\na.c=2").unwrap();
        base.merge(&Config::parse("a.c=3").unwrap());
        assert_eq!(base.get("a.c"), Some("3"));
        assert_eq!(base.get("a.b"), Some("1"));
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:2:0.5").unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("1,-inf,3").unwrap()[1], f64::NEG_INFINITY);
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let c = Config::parse("model.rho=0.1\nrun.seed=9\nsim.cap=500").unwrap();
        let mut m = Manifest::new("simulate", &c).unwrap();
        m.outputs.push("snapshots.csv".into());
        let json = serde_json::to_string(&m).unwrap();
        let back: Manifest = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.config, c);
        assert_eq!(back.seed, 9);
    }
}
