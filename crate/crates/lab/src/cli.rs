//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{Config, Manifest};
use crate::error::{LabError, Result};
use crate::experiments::run_command;

#[derive(Debug, Parser)]
#[command(name = "bdlab", version, about = "Verification lab for a typed branching diffusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Growth rates and optimizers over a (gamma, kappa) grid.
    Rates {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "GRID")]
        gamma_grid: Option<String>,
        #[arg(long, value_name = "GRID")]
        kappa_grid: Option<String>,
    },
    /// Optimal ascent paths and the path functional.
    Paths(Common),
    /// Forward simulation of whole trees.
    Simulate(Common),
    /// Martingale series along simulated trees.
    Martingale(Common),
    /// Spine runs and importance sampling.
    Spine(Common),
    /// Time-inhomogeneous birth-death model.
    Birthdeath(Common),
    /// Single-particle expectation oracles.
    Oracle(Common),
    /// Run a verification suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// closed-form, paths, oracle, martingale, spine, birthdeath, growth or all
        #[arg(long, default_value = "closed-form")]
        suite: String,
    },
}

/// Flags shared by every subcommand; they override the config file.
#[derive(Debug, Args)]
pub struct Common {
    /// key=value config file
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Extra config entry, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory
    #[arg(long, default_value = "bdlab-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
}

impl Common {
    fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::new(),
        };
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| LabError::config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        for (k, v) in [("model.theta", self.theta), ("model.a", self.a), ("model.r", self.r), ("model.rho", self.rho)] {
            if let Some(v) = v {
                cfg.set(k, v.to_string())?;
            }
        }
        if let Some(s) = self.seed {
            cfg.set("run.seed", s.to_string())?;
        }
        if let Some(n) = self.replicas {
            cfg.set("run.replicas", n.to_string())?;
        }
        Ok(cfg)
    }
}

impl Command {
    /// Subcommand name and its fully merged config.
    fn resolve(&self) -> Result<(&'static str, &Common, Config)> {
        let (name, common) = match self {
            Command::Rates { common, .. } => ("rates", common),
            Command::Paths(c) => ("paths", c),
            Command::Simulate(c) => ("simulate", c),
            Command::Martingale(c) => ("martingale", c),
            Command::Spine(c) => ("spine", c),
            Command::Birthdeath(c) => ("birthdeath", c),
            Command::Oracle(c) => ("oracle", c),
            Command::Verify { common, .. } => ("verify", common),
        };
        let mut cfg = common.config()?;
        match self {
            Command::Rates { gamma_grid, kappa_grid, .. } => {
                if let Some(g) = gamma_grid {
                    cfg.set("rates.gamma_grid", g.as_str())?;
                }
                if let Some(k) = kappa_grid {
                    cfg.set("rates.kappa_grid", k.as_str())?;
                }
            }
            Command::Verify { suite, .. } => cfg.set("verify.suite", suite.as_str())?,
            _ => {}
        }
        Ok((name, common, cfg))
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let (name, common, cfg) = cli.command.resolve()?;
    // validate before touching the filesystem
    cfg.params()?;
    let start = Instant::now();
    std::fs::create_dir_all(&common.out).map_err(|e| LabError::io(&common.out, e))?;
    let outcome = run_command(name, &cfg, &common.out)?;
    let mut m = Manifest::new(name, &cfg)?;
    m.wall_time_s = start.elapsed().as_secs_f64();
    m.outputs = outcome.outputs;
    m.truncated_replicas = outcome.truncated_replicas;
    m.status = outcome.status;
    m.write(&common.out.join("manifest.json"))?;
    Ok(outcome.status)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("bdlab: {e}");
            e.exit_code()
        }
    }
}
