//! Experiment runners behind the CLI subcommands.
//!
//! Each runner reads its settings from a [`Config`], writes its tables into
//! the output directory and reports what it wrote. Outputs depend only on
//! the config and seed.

use std::fs;
use std::path::Path;

use bdlab_core::analytics::{delta_gamma_kappa, growth_rate_d, GrowthRate};
use bdlab_core::birthdeath::{outcome_distribution, simulate_bd_once, thinning_majorant, AscentSchedule, BdOutcome, ConstantRates, RateSchedule};
use bdlab_core::martingale::z_value;
use bdlab_core::oracle::{drift_estimate, expected_population, lln_drift, many_to_one_expectation, transformed_expectation, Bounded, OracleConfig};
use bdlab_core::paths::{ascent_for_spec, functional_j_with, integrand, lambda_hat, optimal_paths, AscentSpec, FunctionalMode};
use bdlab_core::rng::{replica_seed, Philox};
use bdlab_core::sim::count_region;
use bdlab_core::spectral::Sign;
use bdlab_core::spine::{importance_sample, run_spine, IsEstimate, SpineOptions};
use bdlab_core::stats::median;
use bdlab_core::EstimatorResult;
use serde_json::json;

use crate::config::Config;
use crate::error::{LabError, Result};
use crate::row;
use crate::runner::try_par_replicas;
use crate::suites::{run_suite, simulate_many, Scale};
use crate::table::Table;

/// What a runner produced and the exit status it asks for.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub outputs: Vec<String>,
    pub truncated_replicas: usize,
    pub status: i32,
}

impl Outcome {
    fn table(&mut self, dir: &Path, name: &str, t: &Table) -> Result<()> {
        t.write(&dir.join(name))?;
        self.outputs.push(name.into());
        Ok(())
    }

    fn json(&mut self, dir: &Path, name: &str, v: &serde_json::Value) -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, serde_json::to_string_pretty(v)? + "\n").map_err(|e| LabError::io(&p, e))?;
        self.outputs.push(name.into());
        Ok(())
    }
}

pub const COMMANDS: [&str; 8] = ["rates", "paths", "simulate", "martingale", "spine", "birthdeath", "oracle", "verify"];

pub fn run_command(cmd: &str, cfg: &Config, out: &Path) -> Result<Outcome> {
    match cmd {
        "rates" => rates(cfg, out),
        "paths" => paths(cfg, out),
        "simulate" => simulate(cfg, out),
        "martingale" => martingale(cfg, out),
        "spine" => spine(cfg, out),
        "birthdeath" => birthdeath(cfg, out),
        "oracle" => oracle(cfg, out),
        "verify" => verify(cfg, out),
        _ => Err(LabError::config(format!("unknown command `{cmd}`"))),
    }
}

fn rate_value(g: GrowthRate) -> f64 {
    g.finite().unwrap_or(f64::NEG_INFINITY)
}

/// Growth-rate table over a (γ, κ) grid.
pub fn rates(cfg: &Config, out: &Path) -> Result<Outcome> {
    let p = cfg.params()?;
    let gammas = cfg.grid_or("rates.gamma_grid", &[0.0, 0.5, 1.0, 1.5, 2.0])?;
    let kappas = cfg.grid_or("rates.kappa_grid", &[0.0, 0.5, 1.0])?;
    let mut t = Table::new(&["gamma", "kappa", "delta", "lambda_bar", "growth_rate"]);
    for &g in &gammas {
        for &k in &kappas {
            let d = delta_gamma_kappa(&p, g, k)?;
            t.push(row![g, k, d.value, d.argmin_lambda, rate_value(growth_rate_d(&p, g, k)?)]);
        }
    }
    let mut o = Outcome::default();
    o.table(out, "rates.csv", &t)?;
    Ok(o)
}

/// Optimal ascent pair on a grid with the integrand and running J.
pub fn paths(cfg: &Config, out: &Path) -> Result<Outcome> {
    let p = cfg.params()?;
    let spec = AscentSpec::new(cfg.f64_or("paths.beta", 1.0)?, cfg.f64_or("paths.kappa", 1.0)?, cfg.f64_or("paths.t", 100.0)?)?;
    // an explicit window uses its own optimizer; otherwise the clock
    let asc = match cfg.get("paths.tau") {
        Some(_) => {
            let tau = cfg.f64_or("paths.tau", 0.0)?;
            optimal_paths(&p, spec, lambda_hat(&p, spec, tau)?, tau)?
        }
        None => ascent_for_spec(&p, spec)?,
    };
    let points = cfg.usize_or("paths.points", 201)?.max(2);
    let (x, y) = (asc.x_path(), asc.y_path());
    let mut t = Table::new(&["s", "y", "x", "integrand", "j"]);
    for i in 0..points {
        let s = asc.tau * i as f64 / (points - 1) as f64;
        let f = if s == 0.0 { f64::NAN } else { integrand(&p, &x, &y, s)? };
        let j = if s == 0.0 { 0.0 } else { functional_j_with(&p, &x, &y, s, FunctionalMode::AtS, 512)?.j_value };
        t.push(row![s, asc.y(s).value, asc.x(s).value, f, j]);
    }
    let total = functional_j_with(&p, &x, &y, asc.tau, FunctionalMode::SupOver, 1 << 14)?;
    let mut o = Outcome::default();
    o.table(out, "paths.csv", &t)?;
    o.json(
        out,
        "paths.json",
        &json!({
            "lambda": asc.lambda,
            "mu": asc.mu,
            "tau": asc.tau,
            "closed_form_cost": asc.closed_form_cost(),
            "j_tau": total.j_value,
            "sup_j": total.l_value,
            "argmax": total.argmax,
            "error_estimate": total.error_estimate,
        }),
    )?;
    Ok(o)
}

fn snapshot_times(cfg: &Config, key: &str, horizon: f64) -> Result<Vec<f64>> {
    cfg.grid_or(key, &[horizon])
}

/// Forward trees: every particle at every snapshot, plus the growth table.
pub fn simulate(cfg: &Config, out: &Path) -> Result<Outcome> {
    let p = cfg.params()?;
    let horizon = cfg.f64_or("sim.t", 4.0)?;
    let times = snapshot_times(cfg, "sim.snapshots", horizon)?;
    let sc = cfg.sim_config(horizon, times.clone())?;
    let n = cfg.usize_or("run.replicas", 10)?;
    let start = (cfg.f64_or("sim.x0", 0.0)?, cfg.f64_or("sim.y0", 0.0)?);
    let runs = simulate_many(&p, start, &sc, n)?;
    let mut snaps = Table::new(&["replica", "time", "label", "x", "y", "truncated"]);
    for (i, r) in runs.iter().enumerate() {
        for s in r {
            if s.truncated {
                snaps.push(row![i, s.time, "", f64::NAN, f64::NAN, true]);
            }
            for q in &s.particles {
                snaps.push(row![i, s.time, q.label.to_string(), q.x, q.y, false]);
            }
        }
    }
    let gammas = cfg.grid_or("growth.gamma_grid", &[0.0, 0.5, 1.0])?;
    let kappas = cfg.grid_or("growth.kappa_grid", &[0.0, 1.0])?;
    let mut growth = Table::new(&["t", "gamma", "kappa", "log_count_over_t", "theory_value"]);
    for (k, &t) in times.iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        for &g in &gammas {
            for &kap in &kappas {
                let vals: Vec<f64> = runs
                    .iter()
                    .filter(|r| !r[k].truncated)
                    .map(|r| count_region(&r[k], g, Some(kap), None).map(|c| (c as f64).ln() / t))
                    .collect::<bdlab_core::Result<_>>()?;
                growth.push(row![t, g, kap, median(&vals), rate_value(growth_rate_d(&p, g, kap)?)]);
            }
        }
    }
    let truncated = runs.iter().filter(|r| r.iter().any(|s| s.truncated)).count();
    let mut o = Outcome { truncated_replicas: truncated, status: if truncated > 0 { 2 } else { 0 }, ..Outcome::default() };
    o.table(out, "snapshots.csv", &snaps)?;
    o.table(out, "growth.csv", &growth)?;
    Ok(o)
}

/// log Z± series over snapshots.
pub fn martingale(cfg: &Config, out: &Path) -> Result<Outcome> {
    let p = cfg.params()?;
    let horizon = cfg.f64_or("sim.t", 2.0)?;
    let times = snapshot_times(cfg, "sim.snapshots", horizon)?;
    let sc = cfg.sim_config(horizon, times)?;
    let n = cfg.usize_or("run.replicas", 10)?;
    let lambdas = cfg.grid_or("martingale.lambda_grid", &[-0.3])?;
    let runs = simulate_many(&p, (0.0, 0.0), &sc, n)?;
    let mut t = Table::new(&["replica", "time", "lambda", "sign", "log_value"]);
    for (i, r) in runs.iter().enumerate() {
        for s in r.iter().filter(|s| !s.truncated) {
            for &l in &lambdas {
                for sign in [Sign::Minus, Sign::Plus] {
                    t.push(row![i, s.time, l, sign.as_str(), z_value(s, &p, l, sign)?]);
                }
            }
        }
    }
    let truncated = runs.iter().filter(|r| r.iter().any(|s| s.truncated)).count();
    let mut o = Outcome { truncated_replicas: truncated, status: if truncated > 0 { 2 } else { 0 }, ..Outcome::default() };
    o.table(out, "series.csv", &t)?;
    Ok(o)
}

/// Spine traces and an importance-sampling estimate of `P(max Y(τ) ≥ level)`.
pub fn spine(cfg: &Config, out: &Path) -> Result<Outcome> {
    let p = cfg.params()?;
    let lambda = cfg.f64_or("spine.lambda", -0.3)?;
    let tau = cfg.f64_or("spine.tau", 0.5)?;
    let level = cfg.f64_or("spine.level", 2.0)?;
    let n = cfg.usize_or("run.replicas", 100)?;
    let traced = cfg.usize_or("spine.traces", 10)?.min(n);
    let sc = cfg.sim_config(tau, vec![tau])?;
    let runs = try_par_replicas(traced, |i| {
        run_spine(&p, lambda, (0.0, 0.0), tau, &sc.for_replica(i), SpineOptions { spine_only: true, record_path: true })
    })?;
    let mut t = Table::new(&["replica", "s", "xi", "eta", "is_birth"]);
    for (i, r) in runs.iter().enumerate() {
        for q in &r.spine_path {
            t.push(row![i, q.s, q.xi, q.eta, q.is_birth]);
        }
    }
    let event = |r: &bdlab_core::spine::SpineRun| r.snapshot.as_ref().is_some_and(|s| s.particles.iter().any(|q| q.y >= level));
    let is_seed = replica_seed(sc.seed, 1);
    let isc = sc.with_seed(is_seed);
    let draws = try_par_replicas(n, |i| importance_sample(&p, lambda, &event, tau, (0.0, 0.0), &isc.for_replica(i)))?;
    let est = IsEstimate::from_draws(&draws, isc.seed);
    let mut o = Outcome { truncated_replicas: est.discarded, status: if est.flagged { 2 } else { 0 }, ..Outcome::default() };
    o.table(out, "spine_trace.csv", &t)?;
    o.json(
        out,
        "estimate.json",
        &json!({
            "lambda": lambda,
            "tau": tau,
            "level": level,
            "estimate": est.result.estimate,
            "std_error": est.result.std_error,
            "replicas": est.result.replicas,
            "discarded": est.discarded,
            "flagged": est.flagged,
            "log_weight_min": est.log_weight_min,
            "log_weight_median": est.log_weight_median,
            "log_weight_max": est.log_weight_max,
        }),
    )?;
    Ok(o)
}

fn bd_report<S: RateSchedule + Sync>(sched: &S, cfg: &Config, out: &Path, extra: serde_json::Value) -> Result<Outcome> {
    let d: BdOutcome = outcome_distribution(sched)?;
    let n_max = cfg.u64_or("bd.n_max", 20)?;
    let mut o = Outcome::default();
    o.json(
        out,
        "outcome.json",
        &json!({
            "schedule": extra,
            "w": d.w_tau,
            "u": d.u_tau,
            "v": d.v_tau,
            "mean": d.mean,
            "nu_tau": d.nu_tau,
            "pmf": d.pmf_table(n_max),
        }),
    )?;
    let n = cfg.usize_or("run.replicas", 0)?;
    if n > 0 {
        let seed = cfg.seed()?;
        let bound = thinning_majorant(sched);
        let counts = try_par_replicas(n, |i| simulate_bd_once(sched, &bound, &mut Philox::new(replica_seed(seed, i))))?;
        let top = counts.iter().copied().max().unwrap_or(0).max(n_max);
        let mut t = Table::new(&["n", "observed", "expected"]);
        for k in 0..=top {
            let c = counts.iter().filter(|&&v| v == k).count();
            t.push(row![k, c, n as f64 * d.pmf(k)]);
        }
        o.table(out, "counts.csv", &t)?;
    }
    Ok(o)
}

/// Closed-form outcome law of the birth–death model, optionally simulated.
pub fn birthdeath(cfg: &Config, out: &Path) -> Result<Outcome> {
    match cfg.str_or("bd.schedule", "ascent") {
        "constant" => {
            let (b, m, tau) = (cfg.f64_or("bd.birth", 1.0)?, cfg.f64_or("bd.death", 3.0)?, cfg.f64_or("bd.tau", 1.0)?);
            let s = ConstantRates::new(b, m, tau)?;
            bd_report(&s, cfg, out, json!({"kind": "constant", "birth": b, "death": m, "tau": tau}))
        }
        "ascent" => {
            let p = cfg.params()?;
            let (beta, kappa, t) = (cfg.f64_or("bd.beta", 1.0)?, cfg.f64_or("bd.kappa", 1.0)?, cfg.f64_or("bd.t", 10.0)?);
            let spec = AscentSpec::new(beta, kappa, t)?;
            // an explicit window uses its own optimizer; otherwise the clock
            let (lambda, tau) = match cfg.get("bd.tau") {
                Some(_) => {
                    let tau = cfg.f64_or("bd.tau", 0.0)?;
                    (lambda_hat(&p, spec, tau)?, tau)
                }
                None => {
                    let lambda = delta_gamma_kappa(&p, beta, kappa)?.argmin_lambda;
                    (lambda, bdlab_core::paths::tau_of_t(&p, lambda, t)?)
                }
            };
            let asc = optimal_paths(&p, spec, lambda, tau)?;
            let s = AscentSchedule { params: &p, ascent: &asc };
            bd_report(&s, cfg, out, json!({"kind": "ascent", "beta": beta, "kappa": kappa, "t": t, "lambda": lambda, "tau": tau}))
        }
        other => Err(LabError::config(format!("bd.schedule: unknown schedule `{other}`"))),
    }
}

fn est_json(e: &EstimatorResult) -> serde_json::Value {
    json!({"estimate": e.estimate, "std_error": e.std_error, "replicas": e.replicas})
}

/// Single-particle oracles for `E|N_t|` and the transformed drift.
pub fn oracle(cfg: &Config, out: &Path) -> Result<Outcome> {
    let p = cfg.params()?;
    let t = cfg.f64_or("oracle.t", 1.0)?;
    let lambda = cfg.f64_or("oracle.lambda", -0.3)?;
    let y0 = cfg.f64_or("oracle.y0", 0.0)?;
    let seed = cfg.seed()?;
    let oc = OracleConfig::new(
        cfg.f64_or("sim.h_max", crate::config::DEFAULT_H_MAX)?,
        cfg.f64_or("sim.c_step", crate::config::DEFAULT_C_STEP)?,
        cfg.usize_or("run.replicas", 1000)?,
        seed,
    )?;
    let one = Bounded::new(|_: f64, _: f64| 1.0, 1.0);
    let m1 = many_to_one_expectation(&p, &one, t, (0.0, y0), &oc)?;
    let tr = transformed_expectation(&p, lambda, &one, t, (0.0, y0), &OracleConfig { seed: replica_seed(seed, 1), ..oc })?;
    let drift_t = cfg.f64_or("oracle.drift_t", 20.0)?;
    let dr = drift_estimate(&p, lambda, drift_t, (0.0, 0.0), &OracleConfig { seed: replica_seed(seed, 2), ..oc })?;
    let unbounded = m1.unbounded_weight || tr.unbounded_weight;
    let mut o = Outcome { status: if unbounded { 2 } else { 0 }, ..Outcome::default() };
    o.json(
        out,
        "oracle.json",
        &json!({
            "t": t,
            "lambda": lambda,
            "expected_population": expected_population(&p, t, y0)?,
            "many_to_one": est_json(&m1.result),
            "many_to_one_weight_ratio": m1.weight_ratio,
            "transformed": est_json(&tr.result),
            "transformed_weight_ratio": tr.weight_ratio,
            "unbounded_weight": unbounded,
            "drift_t": drift_t,
            "drift": est_json(&dr),
            "lln_drift": lln_drift(&p, lambda)?,
        }),
    )?;
    Ok(o)
}

/// Runs a verification suite; status 3 when any check fails.
pub fn verify(cfg: &Config, out: &Path) -> Result<Outcome> {
    let suite = cfg.str_or("verify.suite", "closed-form");
    let scale = Scale { replicas: cfg.get("run.replicas").map(|_| cfg.usize_or("run.replicas", 0)).transpose()? };
    let report = run_suite(suite, scale, cfg.seed()?)?;
    for c in &report.criteria {
        println!("{}", c.line());
    }
    let mut o = Outcome { status: if report.passed() { 0 } else { 3 }, ..Outcome::default() };
    o.outputs = report.write(out)?;
    Ok(o)
}
