//! Verification suites: one function per acceptance criterion.
//!
//! Replica counts default to the documented ones; a smaller override marks
//! the criterion as underpowered but still runs it.

use std::time::Instant;

use bdlab_core::analytics::{
    delta_gamma, delta_gamma_kappa, legendre_pair, numeric_growth_rate, numeric_min_speed, numeric_theta_cost,
    optimal_split, theta_cost, wave_speed, LegendreDirection,
};
use bdlab_core::birthdeath::{
    outcome_distribution, simulate_bd_once, thinning_majorant, AscentSchedule, ConstantRates,
};
use bdlab_core::martingale::{space_bound, space_type_bound, z_value};
use bdlab_core::oracle::{expected_population, many_to_one_expectation, transformed_expectation, Bounded, OracleConfig};
use bdlab_core::paths::{
    functional_j, functional_j_panels, lambda_hat, optimal_paths, tau_of_t, AscentSpec, FunctionalMode,
};
use bdlab_core::rng::{replica_seed, Philox};
use bdlab_core::sim::{count_region, extremes, run, PopulationSnapshot, SimConfig};
use bdlab_core::spectral::{lambda_min, Sign};
use bdlab_core::spine::{
    importance_sample, run_spine, short_climb_indicator, spine_birth_mean, IsEstimate, ShortClimbSpec, SpineOptions,
    MAX_TUBE_SPACING,
};
use bdlab_core::stats::{median, slope};
use bdlab_core::{EstimatorResult, ModelParams, SpectralQuantities};

use crate::error::{LabError, Result};
use crate::hypothesis::chi_square_counts;
use crate::report::{Check, CriterionReport, Report};
use crate::runner::try_par_replicas;

pub const SUITES: [&str; 8] = ["closed-form", "paths", "oracle", "martingale", "spine", "birthdeath", "growth", "all"];

/// Replica override for a suite run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Scale {
    pub replicas: Option<usize>,
}

impl Scale {
    pub fn full() -> Self {
        Self::default()
    }

    /// Replica count to use in place of `documented`, and whether it falls short.
    fn n(&self, documented: usize) -> (usize, bool) {
        match self.replicas {
            Some(r) => (r.max(2), r < documented),
            None => (documented, false),
        }
    }
}

/// Criteria run by each named suite.
pub fn criteria_of(suite: &str) -> Option<&'static [u8]> {
    Some(match suite {
        "closed-form" => &[1, 2, 3],
        "paths" => &[4, 5],
        "oracle" => &[6, 7],
        "martingale" => &[8, 9],
        "birthdeath" => &[10],
        "spine" => &[11],
        "growth" => &[12],
        "all" => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12],
        _ => return None,
    })
}

pub fn run_suite(name: &str, scale: Scale, seed: u64) -> Result<Report> {
    let ids = criteria_of(name).ok_or_else(|| LabError::config(format!("unknown suite `{name}`")))?;
    let mut report = Report::new(name);
    for &id in ids {
        report.criteria.push(run_criterion(id, scale, seed)?);
    }
    Ok(report)
}

pub fn run_criterion(id: u8, scale: Scale, seed: u64) -> Result<CriterionReport> {
    let start = Instant::now();
    let s = replica_seed(seed, id as u64);
    let mut rep = match id {
        1 => identity_battery(),
        2 => variational_battery(),
        3 => exact_wave_speed(),
        4 => lambda_hat_convergence(),
        5 => path_functional(),
        6 => many_to_one(scale, s)?,
        7 => expected_population_check(scale, s)?,
        8 => martingale_checks(scale, s)?,
        9 => decay_trend(scale, s)?,
        10 => birth_death(scale, s)?,
        11 => spine_checks(scale, s)?,
        12 => growth_trends(scale, s)?,
        _ => return Err(LabError::config(format!("no criterion {id}"))),
    };
    rep.elapsed_s = start.elapsed().as_secs_f64();
    if id == 1 || id == 2 {
        let limit = if id == 1 { 1.0 } else { 5.0 };
        rep.push(Check::new("runtime_s", rep.elapsed_s, format!("< {limit}"), rep.elapsed_s < limit));
    }
    Ok(rep)
}

/// P0 and two perturbed parameter sets.
pub fn battery_params() -> [ModelParams; 3] {
    [
        ModelParams::p0(),
        ModelParams::new(7.3, 0.6, 0.4, 2.2).expect("valid"),
        ModelParams::new(25.0, 2.5, 2.9, 0.35).expect("valid"),
    ]
}

fn gamma_grid() -> impl Iterator<Item = f64> {
    (0..9).map(|i| 0.5 * i as f64)
}

fn kappa_grid() -> impl Iterator<Item = f64> {
    (0..5).map(|j| 0.5 * j as f64)
}

/// Running maximum of absolute deviations.
#[derive(Default)]
struct MaxDev(f64);

impl MaxDev {
    fn add(&mut self, d: f64) {
        self.0 = if d.is_nan() { f64::INFINITY } else { self.0.max(d.abs()) };
    }
}

fn identity_battery() -> CriterionReport {
    let mut rep = CriterionReport::new(1, "closed-form identities");
    let (mut psi, mut eig, mut red, mut d0, mut th0, mut split, mut leg) =
        (MaxDev::default(), MaxDev::default(), MaxDev::default(), MaxDev::default(), MaxDev::default(), MaxDev::default(), MaxDev::default());
    for p in battery_params() {
        let lm = lambda_min(&p);
        for i in 0..40 {
            let l = lm * (1.0 - (i as f64 + 0.5) / 40.0);
            let s = SpectralQuantities::new(&p, l).expect("in range");
            psi.add(s.psi_minus + s.psi_plus - 0.5);
            eig.add(s.e_minus - p.rho() - p.theta() * s.psi_minus);
            eig.add(s.e_plus - p.rho() - p.theta() * s.psi_plus);
            let g = legendre_pair(&p, l, LegendreDirection::LambdaToGamma).expect("in range");
            leg.add(legendre_pair(&p, g, LegendreDirection::GammaToLambda).expect("gamma > 0") - l);
        }
        let s0 = SpectralQuantities::new(&p, 0.0).expect("lambda 0");
        d0.add(delta_gamma(&p, 0.0).expect("gamma 0").value - s0.e_minus);
        for gamma in gamma_grid() {
            let base = delta_gamma(&p, gamma).expect("gamma >= 0");
            if gamma > 0.0 {
                let l = legendre_pair(&p, gamma, LegendreDirection::GammaToLambda).expect("gamma > 0");
                leg.add(legendre_pair(&p, l, LegendreDirection::LambdaToGamma).expect("in range") - gamma);
            }
            for kappa in kappa_grid() {
                let dk = delta_gamma_kappa(&p, gamma, kappa).expect("grid point");
                if kappa == 0.0 {
                    red.add(dk.value - base.value);
                } else {
                    th0.add(theta_cost(&p, 0.0, kappa).expect("kappa > 0").value - kappa * kappa * s0.psi_plus);
                }
                if gamma > 0.0 {
                    let sp = optimal_split(&p, gamma, kappa).expect("gamma > 0");
                    split.add(sp.alpha + sp.beta - gamma);
                    let mut v = delta_gamma(&p, sp.alpha).expect("alpha >= 0").value;
                    if kappa > 0.0 {
                        v -= theta_cost(&p, sp.beta, kappa).expect("kappa > 0").value;
                    }
                    split.add(v - dk.value);
                }
            }
        }
    }
    for (name, d) in [
        ("psi_minus_plus_psi_plus_is_half", psi),
        ("eigenvalue_is_rho_plus_theta_psi", eig),
        ("kappa_zero_reduces_to_delta_gamma", red),
        ("delta_at_zero_is_e_minus", d0),
        ("theta_cost_at_beta_zero", th0),
        ("optimal_split_identity", split),
        ("legendre_round_trips", leg),
    ] {
        rep.push(Check::within(name, d.0, 1e-9));
    }
    rep
}

fn variational_battery() -> CriterionReport {
    let mut rep = CriterionReport::new(2, "variational forms match closed forms");
    let (mut gv, mut ga, mut tv, mut ta) = (MaxDev::default(), MaxDev::default(), MaxDev::default(), MaxDev::default());
    for p in battery_params() {
        for gamma in gamma_grid() {
            for kappa in kappa_grid() {
                let dk = delta_gamma_kappa(&p, gamma, kappa).expect("grid point");
                let n = numeric_growth_rate(&p, gamma, kappa);
                gv.add(n.value - dk.value);
                if gamma > 0.0 {
                    ga.add(n.x - dk.argmin_lambda);
                }
                // the same grid read as (β, κ) for the ascent cost
                if gamma > 0.0 || kappa > 0.0 {
                    let th = theta_cost(&p, gamma, kappa).expect("not both zero");
                    let nt = numeric_theta_cost(&p, gamma, kappa);
                    tv.add(nt.value - th.value);
                    if gamma > 0.0 {
                        ta.add(nt.x - th.lambda_bar);
                    }
                }
            }
        }
    }
    rep.push(Check::within("growth_rate_value", gv.0, 1e-7));
    rep.push(Check::within("growth_rate_argmin", ga.0, 1e-6));
    rep.push(Check::within("ascent_cost_value", tv.0, 1e-7));
    rep.push(Check::within("ascent_cost_argmax", ta.0, 1e-6));
    rep
}

fn exact_wave_speed() -> CriterionReport {
    let mut rep = CriterionReport::new(3, "exact wave speed");
    let p = ModelParams::p0();
    let ws = wave_speed(&p);
    let r22 = 22f64.sqrt();
    rep.push(Check::within("c_tilde_minus_sqrt22", ws.c_tilde - r22, 1e-12));
    rep.push(Check::within("numeric_min_speed_minus_c_tilde", numeric_min_speed(&p).value - ws.c_tilde, 1e-8));
    rep.push(Check::within("lambda_tilde_plus_sqrt22_over_7", ws.lambda_tilde + r22 / 7.0, 1e-12));
    rep
}

const NO_ROOT: &str = "the endpoint condition has no real root for tau below about 4.24 at P0";

fn lambda_hat_convergence() -> CriterionReport {
    let mut rep = CriterionReport::new(4, "finite-window optimizer convergence");
    let p = ModelParams::p0();
    let spec = AscentSpec::new(1.0, 1.0, 100.0).expect("valid spec");
    let target = -0.6984303;
    match lambda_hat(&p, spec, 6.0) {
        Ok(l) => {
            let mut c = Check::within("lambda_hat_tau6_minus_reference", l - target, 1e-3);
            if !c.pass {
                c = c.known_limit("the faithful root at tau = 6 sits 2.5e-3 from the limit value");
            }
            rep.push(c.note(format!("lambda_hat(6) = {l}")));
        }
        Err(e) => rep.push(Check::new("lambda_hat_tau6_minus_reference", f64::NAN, "<= 1e-3", false).note(e.to_string())),
    }
    let taus = [2.0, 4.0, 6.0, 8.0];
    let vals: Vec<Option<f64>> = taus.iter().map(|&t| lambda_hat(&p, spec, t).ok()).collect();
    let missing = vals.iter().filter(|v| v.is_none()).count();
    let found: Vec<f64> = vals.iter().flatten().copied().collect();
    let monotone = found.windows(2).all(|w| w[1] <= w[0]) || found.windows(2).all(|w| w[1] >= w[0]);
    let mut c = Check::new("lambda_hat_monotone_over_tau_2_4_6_8", missing as f64, "0 missing and monotone", missing == 0 && monotone)
        .note(format!("values {vals:?}"));
    if missing > 0 {
        c = c.known_limit(NO_ROOT);
    }
    rep.push(c);
    rep
}

fn path_functional() -> CriterionReport {
    let mut rep = CriterionReport::new(5, "path functional consistency");
    let p = ModelParams::p0();
    let spec = AscentSpec::new(1.0, 1.0, 100.0).expect("valid spec");
    for tau in [1.0, 2.0] {
        let name = format!("j_vs_closed_form_tau{tau}");
        match lambda_hat(&p, spec, tau).and_then(|l| optimal_paths(&p, spec, l, tau)) {
            Ok(asc) => {
                let j = functional_j(&p, &asc.x_path(), &asc.y_path(), tau, FunctionalMode::AtS).map(|v| v.j_value);
                let cf = asc.closed_form_cost();
                let rel = j.map_or(f64::NAN, |j| ((j - cf) / cf).abs());
                rep.push(Check::within(name, rel, 1e-5));
            }
            Err(e) => rep.push(
                Check::new(name, f64::NAN, "<= 1e-5 relative", false).note(e.to_string()).known_limit(NO_ROOT),
            ),
        }
    }
    let (mut rel, mut sup, mut worst_ratio) = (MaxDev::default(), MaxDev::default(), f64::INFINITY);
    for tau in [6.0, 8.0, 12.0] {
        let Ok(asc) = lambda_hat(&p, spec, tau).and_then(|l| optimal_paths(&p, spec, l, tau)) else {
            rel.add(f64::NAN);
            continue;
        };
        let (x, y) = (asc.x_path(), asc.y_path());
        let cf = asc.closed_form_cost();
        match functional_j(&p, &x, &y, tau, FunctionalMode::SupOver) {
            Ok(v) => {
                rel.add((v.j_value - cf) / cf);
                sup.add((v.l_value.unwrap_or(f64::NAN) - v.j_value) / v.j_value.abs().max(1.0));
            }
            Err(_) => rel.add(f64::NAN),
        }
        let e64 = functional_j_panels(&p, &x, &y, tau, 64).map_or(f64::NAN, |j| (j - cf).abs());
        let e128 = functional_j_panels(&p, &x, &y, tau, 128).map_or(f64::NAN, |j| (j - cf).abs());
        worst_ratio = worst_ratio.min(e64 / e128);
    }
    rep.push(Check::within("j_vs_closed_form_tau_6_8_12", rel.0, 1e-5));
    rep.push(Check::within("sup_equals_endpoint_value", sup.0, 1e-9));
    rep.push(Check::new("quadrature_error_ratio_64_to_128", worst_ratio, ">= 8", worst_ratio >= 8.0));
    rep
}

/// Snapshots of `n` independent trees, one `Vec` per replica.
pub fn simulate_many(p: &ModelParams, start: (f64, f64), cfg: &SimConfig, n: usize) -> Result<Vec<Vec<PopulationSnapshot>>> {
    Ok(try_par_replicas(n, |i| run(p, start, &cfg.for_replica(i)))?)
}

fn sim_cfg(h_max: f64, c_step: f64, horizon: f64, snapshots: Vec<f64>, seed: u64) -> Result<SimConfig> {
    Ok(SimConfig::new(h_max, c_step, 2_000_000, horizon, seed)?.with_snapshots(snapshots)?)
}

/// `|a − b| / (3 se_a + 3 se_b)`: at most 1 when the 3σ intervals overlap.
fn overlap_ratio(a: &EstimatorResult, b: &EstimatorResult) -> f64 {
    (a.estimate - b.estimate).abs() / (3.0 * (a.std_error + b.std_error))
}

fn z_ratio(a: &EstimatorResult, target: f64) -> f64 {
    (a.estimate - target).abs() / a.std_error
}

fn many_to_one(scale: Scale, seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(6, "many-to-one equivalence");
    let (n, under) = scale.n(10_000);
    rep.underpowered = under;
    let p = ModelParams::p0();
    let t = 0.75;
    let (h_max, c_step) = (0.05, 0.002);
    let cfg = sim_cfg(h_max, c_step, t, vec![t], replica_seed(seed, 1))?;
    let runs = simulate_many(&p, (0.0, 0.0), &cfg, n)?;
    let truncated = runs.iter().filter(|r| r[0].truncated).count();
    let fs: [(&str, fn(f64, f64) -> f64); 3] = [
        ("one", |_, _| 1.0),
        ("type_window", |_, y| if (-1.0..=1.0).contains(&y) { 1.0 } else { 0.0 }),
        ("gaussian", |x, y| (-x * x - y * y).exp()),
    ];
    for (k, (name, f)) in fs.iter().enumerate() {
        let sums: Vec<f64> = runs.iter().map(|r| r[0].particles.iter().map(|q| f(q.x, q.y)).sum()).collect();
        let sim = EstimatorResult::from_samples(&sums, cfg.seed);
        let bounded = Bounded::new(*f, 1.0);
        let oc = OracleConfig::new(h_max, c_step, n, replica_seed(seed, 10 + k as u64))?;
        let m1 = par_oracle(n, |i| many_to_one_expectation(&p, &bounded, t, (0.0, 0.0), &single(oc, i)))?;
        let oc2 = OracleConfig { seed: replica_seed(seed, 20 + k as u64), ..oc };
        let tr = par_oracle(n, |i| transformed_expectation(&p, -0.3, &bounded, t, (0.0, 0.0), &single(oc2, i)))?;
        let note = format!(
            "simulator {:.6}±{:.6}, many-to-one {:.6}±{:.6}, transformed {:.6}±{:.6}",
            sim.estimate, sim.std_error, m1.estimate, m1.std_error, tr.estimate, tr.std_error
        );
        rep.push(Check::new(format!("{name}_simulator_vs_many_to_one"), overlap_ratio(&sim, &m1), "<= 1", overlap_ratio(&sim, &m1) <= 1.0).note(note.clone()));
        rep.push(Check::new(format!("{name}_simulator_vs_transformed"), overlap_ratio(&sim, &tr), "<= 1", overlap_ratio(&sim, &tr) <= 1.0));
        rep.push(Check::new(format!("{name}_many_to_one_vs_transformed"), overlap_ratio(&m1, &tr), "<= 1", overlap_ratio(&m1, &tr) <= 1.0));
    }
    rep.push(Check::new("truncated_replicas", truncated as f64, "0", truncated == 0));
    Ok(rep)
}

/// A one-replica oracle config whose seed is that replica's stream, so a
/// parallel map over `i` reproduces the sequential oracle exactly.
fn single(oc: OracleConfig, i: u64) -> OracleConfig {
    OracleConfig { replicas: 1, seed: replica_seed(oc.seed, i), ..oc }
}

/// Runs a one-replica oracle per index in parallel and pools the samples.
fn par_oracle<F>(n: usize, f: F) -> Result<EstimatorResult>
where
    F: Fn(u64) -> bdlab_core::Result<bdlab_core::oracle::OracleEstimate> + Sync + Send,
{
    let vals: Vec<f64> = try_par_replicas(n, |i| f(i).map(|e| e.result.estimate))?;
    Ok(EstimatorResult::from_samples(&vals, 0))
}

fn expected_population_check(scale: Scale, seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(7, "expected population");
    let (n, under) = scale.n(10_000);
    rep.underpowered = under;
    let p = ModelParams::p0();
    let target = expected_population(&p, 1.0, 0.0)?;
    let cfg = sim_cfg(0.05, 0.002, 1.0, vec![1.0], replica_seed(seed, 1))?;
    let sizes: Vec<f64> = simulate_many(&p, (0.0, 0.0), &cfg, n)?.iter().map(|r| r[0].len() as f64).collect();
    let est = EstimatorResult::from_samples(&sizes, cfg.seed);
    rep.push(
        Check::new("simulator_mean_population_z", z_ratio(&est, target), "<= 3", z_ratio(&est, target) <= 3.0)
            .note(format!("mean {:.5}±{:.5} vs {target:.7}", est.estimate, est.std_error)),
    );
    let q = ModelParams::new(10.0, 1.0, 0.0, 1.0)?;
    let yule = (1.0f64).exp();
    let cfg = sim_cfg(0.05, 0.002, 1.0, vec![1.0], replica_seed(seed, 2))?;
    let sizes: Vec<f64> = simulate_many(&q, (0.0, 0.0), &cfg, n)?.iter().map(|r| r[0].len() as f64).collect();
    let est = EstimatorResult::from_samples(&sizes, cfg.seed);
    rep.push(
        Check::new("no_type_breeding_simulator_z", z_ratio(&est, yule), "<= 3", z_ratio(&est, yule) <= 3.0)
            .note(format!("mean {:.5}±{:.5} vs e", est.estimate, est.std_error)),
    );
    let oc = OracleConfig::new(0.05, 0.002, 100, replica_seed(seed, 3))?;
    let one = Bounded::new(|_: f64, _: f64| 1.0, 1.0);
    let m = many_to_one_expectation(&q, &one, 1.0, (0.0, 0.3), &oc)?;
    rep.push(Check::within("no_type_breeding_oracle_exact", (m.result.estimate - yule) / yule, 1e-12));
    rep.push(Check::within("no_type_breeding_closed_form", expected_population(&q, 1.0, 0.0)? - yule, 1e-12));
    Ok(rep)
}

/// Counts of bound violations over a grid of (λ, γ, κ, window) on one snapshot.
fn bound_violations(snap: &PopulationSnapshot, p: &ModelParams) -> Result<usize> {
    if snap.truncated || snap.is_empty() {
        return Ok(0);
    }
    let lm = lambda_min(p);
    let mut bad = 0;
    for frac in [0.1, 0.4, 0.7, 0.92] {
        let l = lm * frac;
        for gamma in [0.0, 0.5, 1.0, 2.0] {
            for window in [None, Some((-1.0, 1.0)), Some((1.0, f64::INFINITY))] {
                bad += !space_bound(snap, p, l, gamma, window)?.holds() as usize;
            }
            for kappa in [0.0, 0.5, 1.0] {
                bad += !space_type_bound(snap, p, l, gamma, kappa)?.holds() as usize;
            }
        }
    }
    Ok(bad)
}

fn martingale_checks(scale: Scale, seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(8, "martingale checks");
    let (n, under) = scale.n(10_000);
    rep.underpowered = under;
    let p = ModelParams::p0();
    let lambda = -0.3;
    let cfg = sim_cfg(0.05, 0.002, 1.0, vec![0.25, 0.5, 0.75, 1.0], replica_seed(seed, 1))?;
    let runs = simulate_many(&p, (0.0, 0.0), &cfg, n)?;
    // Z(0) = 1 from the origin
    let ratios: Vec<f64> = runs
        .iter()
        .map(|r| z_value(&r[3], &p, lambda, Sign::Minus).map(f64::exp))
        .collect::<bdlab_core::Result<_>>()?;
    let est = EstimatorResult::from_samples(&ratios, cfg.seed);
    rep.push(
        Check::new("z_minus_ratio_mean_z", z_ratio(&est, 1.0), "<= 3", z_ratio(&est, 1.0) <= 3.0)
            .note(format!("mean {:.5}±{:.5}", est.estimate, est.std_error)),
    );
    let mut checked = 0usize;
    let mut bad = 0usize;
    for r in &runs {
        for s in r {
            bad += bound_violations(s, &p)?;
            checked += 1;
        }
    }
    let low = ModelParams::low_rho();
    let cfg = sim_cfg(0.05, 0.01, 4.0, vec![1.0, 2.0, 3.0, 4.0], replica_seed(seed, 2))?;
    let (m, _) = scale.n(40);
    for r in simulate_many(&low, (0.0, 0.0), &cfg, m)? {
        for s in &r {
            bad += bound_violations(s, &low)?;
            checked += 1;
        }
    }
    rep.push(Check::new("pathwise_bound_violations", bad as f64, "0", bad == 0).note(format!("{checked} snapshots")));
    Ok(rep)
}

fn decay_trend(scale: Scale, seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(9, "decay of the plus martingale");
    let (n, under) = scale.n(200);
    rep.underpowered = under;
    let p = ModelParams::low_rho();
    let lambda = -0.3;
    let mu = SpectralQuantities::new(&p, lambda)?.mu;
    let cfg = sim_cfg(0.05, 0.01, 6.0, vec![2.0, 4.0, 6.0], replica_seed(seed, 1))?;
    // a few spare trees so that n survive the cap
    let runs = simulate_many(&p, (0.0, 0.0), &cfg, n + n / 10)?;
    let kept: Vec<&Vec<PopulationSnapshot>> = runs.iter().filter(|r| !r[2].truncated).take(n).collect();
    let mut meds = Vec::new();
    for k in 0..3 {
        let vals: Vec<f64> = kept
            .iter()
            .map(|r| z_value(&r[k], &p, lambda, Sign::Plus).map(|z| z / r[k].time))
            .collect::<bdlab_core::Result<_>>()?;
        meds.push(median(&vals));
    }
    let rel = (meds[2] / -mu - 1.0).abs();
    rep.push(Check::new("non_truncated_replicas", kept.len() as f64, format!(">= {n}"), kept.len() >= n));
    rep.push(Check::new("median_rate_t6_relative_error", rel, "<= 0.25", rel <= 0.25).note(format!("medians at t=2,4,6: {meds:?}; target {}", -mu)));
    let devs: Vec<f64> = meds.iter().map(|m| (m + mu).abs()).collect();
    let increases = devs.windows(2).filter(|w| w[1] > w[0]).count();
    rep.push(Check::new("deviation_shrinks_over_t_2_4_6", increases as f64, "0", increases == 0).note(format!("{devs:?}")));
    Ok(rep)
}

/// λ̄(1, 1) clock schedule of the ascent to `(−t, √t)`.
pub fn ascent_schedule_setup(p: &ModelParams, t: f64) -> Result<bdlab_core::paths::OptimalAscent> {
    let lambda = delta_gamma_kappa(p, 1.0, 1.0)?.argmin_lambda;
    let tau = tau_of_t(p, lambda, t)?;
    Ok(optimal_paths(p, AscentSpec::new(1.0, 1.0, t)?, lambda, tau)?)
}

fn birth_death(scale: Scale, seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(10, "birth-death law");
    let (n, under) = scale.n(100_000);
    rep.underpowered = under;
    let (m, tau, b) = (0.7, 2.0, 1.3);
    let d = outcome_distribution(&ConstantRates::new(0.0, m, tau)?)?;
    let dev = [(d.w_tau - 1.0), d.u_tau - (1.0 - (-m * tau).exp()), d.v_tau].iter().fold(0.0f64, |a, x| a.max(x.abs()));
    rep.push(Check::within("pure_death_formulas", dev, 1e-12));
    let y = outcome_distribution(&ConstantRates::new(b, 0.0, tau)?)?;
    let dev = [y.u_tau, y.v_tau - (1.0 - (-b * tau).exp()), (y.w_tau - (b * tau).exp()) / (b * tau).exp()]
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()));
    rep.push(Check::within("yule_formulas", dev, 1e-12));

    let p = ModelParams::p0();
    let clock = ascent_schedule_setup(&p, 10.0)?;
    bd_fit(&mut rep, "clock", &p, &clock, n, replica_seed(seed, 1), true)?;
    // same family with the finite-window optimizer at τ = 6: a law with mass away from 0
    let spec = AscentSpec::new(1.0, 1.0, 6.0)?;
    let window = optimal_paths(&p, spec, lambda_hat(&p, spec, 6.0)?, 6.0)?;
    bd_fit(&mut rep, "window", &p, &window, n, replica_seed(seed, 2), false)?;
    Ok(rep)
}

const DEGENERATE_BD: &str =
    "under the clock the schedule has nu(tau) near 49, so no replica is expected to survive and the fit has no power";

/// χ² and mean checks of simulated birth–death counts on an ascent schedule.
fn bd_fit(
    rep: &mut CriterionReport,
    tag: &str,
    p: &ModelParams,
    asc: &bdlab_core::paths::OptimalAscent,
    n: usize,
    seed: u64,
    may_degenerate: bool,
) -> Result<()> {
    let sched = AscentSchedule { params: p, ascent: asc };
    let out = outcome_distribution(&sched)?;
    let bound = thinning_majorant(&sched);
    let counts: Vec<u64> =
        try_par_replicas(n, |i| simulate_bd_once(&sched, &bound, &mut Philox::new(replica_seed(seed, i))))?;
    let degenerate = out.mean * (n as f64) < 1.0;
    let chi = chi_square_counts(&counts, |k| out.pmf(k), 5.0);
    let note = format!("tau {:.6}, nu(tau) {:.6}, U {:.6}, V {:.6}, dof {}", asc.tau, out.nu_tau, out.u_tau, out.v_tau, chi.dof);
    let mut c = Check::new(format!("{tag}_schedule_chi_square_p"), chi.p_value, "> 0.01 with dof >= 1", chi.p_value > 0.01 && chi.dof >= 1)
        .note(note);
    if !c.pass && may_degenerate && degenerate {
        c = c.known_limit(DEGENERATE_BD);
    }
    rep.push(c);
    let est = EstimatorResult::from_samples(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>(), seed);
    let z = z_ratio(&est, out.mean);
    let mut c = Check::new(format!("{tag}_schedule_mean_z"), z, "<= 3", z <= 3.0)
        .note(format!("{:.6e}±{:.6e} vs {:.6e}", est.estimate, est.std_error, out.mean));
    if !c.pass && may_degenerate && degenerate {
        c = c.known_limit(DEGENERATE_BD);
    }
    rep.push(c);
    Ok(())
}

const CLIMB_LIMIT: &str =
    "the clock gives tau = 0 for t below about 14.3 with the ascent optimizer, and the climb is far too rare at t = 16";

/// Parallel IS estimate from one-replica spine draws.
fn par_importance<E>(p: &ModelParams, lambda: f64, event: E, tau: f64, cfg: &SimConfig, n: usize) -> Result<IsEstimate>
where
    E: Fn(&bdlab_core::spine::SpineRun) -> bool + Sync + Send,
{
    let draws = try_par_replicas(n, |i| importance_sample(p, lambda, &event, tau, (0.0, 0.0), &cfg.for_replica(i)))?;
    Ok(IsEstimate::from_draws(&draws, cfg.seed))
}

fn spine_checks(scale: Scale, seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(11, "spine and importance sampling");
    let p = ModelParams::p0();

    let (n, under_a) = scale.n(10_000);
    let lambda = delta_gamma_kappa(&p, 1.0, 1.0)?.argmin_lambda;
    let cfg = sim_cfg(0.05, 0.01, 1.0, vec![1.0], replica_seed(seed, 1))?;
    let opts = SpineOptions { spine_only: true, record_path: false };
    let births: Vec<f64> =
        try_par_replicas(n, |i| run_spine(&p, lambda, (0.0, 0.0), 1.0, &cfg.for_replica(i), opts).map(|r| r.n_tau as f64))?;
    let est = EstimatorResult::from_samples(&births, cfg.seed);
    let target = spine_birth_mean(&p, lambda, 0.0, 1.0)?;
    let z = z_ratio(&est, target);
    rep.push(Check::new("spine_births_mean_z", z, "<= 3", z <= 3.0).note(format!("{:.4}±{:.4} vs {target:.6}", est.estimate, est.std_error)));

    let (n, under_b) = scale.n(100_000);
    let tau = 0.5;
    let cfg = sim_cfg(0.05, 0.01, tau, vec![tau], replica_seed(seed, 2))?;
    let hit = |s: &PopulationSnapshot| s.particles.iter().any(|q| q.y >= 2.0);
    let direct: Vec<f64> = simulate_many(&p, (0.0, 0.0), &cfg, n)?.iter().map(|r| hit(&r[0]) as u8 as f64).collect();
    let direct = EstimatorResult::from_samples(&direct, cfg.seed);
    // spine draws carry whole subtrees and cost far more than forward trees
    let (m, under_is) = scale.n(20_000);
    let cfg = sim_cfg(0.05, 0.01, tau, vec![tau], replica_seed(seed, 3))?;
    let is = par_importance(&p, -0.3, |r| r.snapshot.as_ref().is_some_and(hit), tau, &cfg, m.min(n))?;
    let ov = overlap_ratio(&direct, &is.result);
    rep.push(
        Check::new("mild_event_is_vs_direct", ov, "<= 1", ov <= 1.0 && !is.flagged).note(format!(
            "direct {:.5}±{:.5}, IS {:.5}±{:.5}",
            direct.estimate, direct.std_error, is.result.estimate, is.result.std_error
        )),
    );
    rep.push(Check::new("mild_event_probability", direct.estimate, ">= 1e-3", direct.estimate >= 1e-3));

    let (n, under_c) = scale.n(10_000);
    rep.underpowered = under_a || under_b || under_is || under_c;
    let mut points = Vec::new();
    let mut notes = Vec::new();
    for (k, t) in [4.0, 9.0, 16.0].into_iter().enumerate() {
        let spec = ShortClimbSpec::new(0.5, 0.5, t, 1.0, 1.0)?;
        let (lambda, tau) = spec.lambda_tau(&p)?;
        if tau <= 0.0 {
            notes.push(format!("t={t}: tau=0"));
            continue;
        }
        let cfg = sim_cfg(0.05, 0.01, tau, vec![tau], replica_seed(seed, 10 + k as u64))?.with_trace(MAX_TUBE_SPACING)?;
        let event = |r: &bdlab_core::spine::SpineRun| {
            r.trace.as_ref().is_some_and(|tr| short_climb_indicator(tr, &spec, &p).unwrap_or(false))
        };
        let est = par_importance(&p, lambda, event, tau, &cfg, n)?;
        let rate = -est.result.estimate.ln() / t;
        notes.push(format!("t={t}: tau={tau:.4}, P={:.3e}", est.result.estimate));
        if rate.is_finite() {
            points.push((t, -est.result.estimate.ln(), rate));
        }
    }
    let target = theta_cost(&p, 1.0, 1.0)?.value;
    let (fit, ok) = if points.len() >= 2 {
        let ts: Vec<f64> = points.iter().map(|q| q.0).collect();
        let ls: Vec<f64> = points.iter().map(|q| q.1).collect();
        let s = slope(&ts, &ls).unwrap_or(f64::NAN);
        let mono = points.windows(2).all(|w| w[1].2 >= w[0].2);
        (s, points.len() == 3 && ((s - target) / target).abs() <= 0.3 && mono)
    } else {
        (f64::NAN, false)
    };
    let mut c = Check::new("short_climb_slope_vs_ascent_cost", fit, format!("within 30% of {target:.4}, nondecreasing"), ok)
        .note(notes.join("; "));
    if !ok {
        c = c.known_limit(CLIMB_LIMIT);
    }
    rep.push(c);
    Ok(rep)
}

const GROWTH_LAG: &str =
    "at t = 6 the median counts and the leftmost particle still lag the asymptotic rates; the lag shrinks over t = 2, 4, 6";

fn growth_trends(scale: Scale, seed: u64) -> Result<CriterionReport> {
    let mut rep = CriterionReport::new(12, "growth-rate trends");
    let (n, under) = scale.n(60);
    rep.underpowered = under;
    let p = ModelParams::low_rho();
    let cfg = sim_cfg(0.05, 0.01, 6.0, vec![2.0, 4.0, 6.0], replica_seed(seed, 1))?;
    let runs = simulate_many(&p, (0.0, 0.0), &cfg, n)?;
    let kept: Vec<&Vec<PopulationSnapshot>> = runs.iter().filter(|r| !r[2].truncated).collect();
    rep.push(Check::new("non_truncated_replicas", kept.len() as f64, ">= 50", kept.len() >= 50.min(n)));
    for gamma in [0.0, 1.0] {
        let vals: Vec<f64> = kept
            .iter()
            .map(|r| count_region(&r[2], gamma, None, None).map(|c| (c as f64).ln() / 6.0))
            .collect::<bdlab_core::Result<_>>()?;
        let med = median(&vals);
        let d = delta_gamma(&p, gamma)?.value;
        let mut c = Check::within(format!("log_count_rate_gamma{gamma}_minus_delta"), med - d, 0.25).note(format!("median {med:.4} vs {d:.4}"));
        if !c.pass && med < d {
            c = c.known_limit(GROWTH_LAG);
        }
        rep.push(c);
    }
    let c = wave_speed(&p).c_tilde;
    let mut meds = Vec::new();
    for k in 0..3 {
        let vals: Vec<f64> = kept
            .iter()
            .map(|r| extremes(&r[k]).map(|e| e.min_x / r[k].time))
            .collect::<bdlab_core::Result<_>>()?;
        meds.push(median(&vals));
    }
    let mut front = Check::new("min_x_over_t_at_6", meds[2], format!("in [{:.4}, {:.4}]", -c, -0.75 * c), meds[2] >= -c && meds[2] <= -0.75 * c);
    if !front.pass && meds[2] > -0.75 * c {
        front = front.known_limit(GROWTH_LAG);
    }
    rep.push(front);
    let decreasing = meds.windows(2).all(|w| w[1] < w[0]);
    rep.push(Check::new("min_x_over_t_decreasing", decreasing as u8 as f64, "1", decreasing).note(format!("{meds:?}")));
    let (gamma, kappa) = (1.0, 2.0);
    let dk = delta_gamma_kappa(&p, gamma, kappa)?.value;
    let zeros = kept.iter().map(|r| count_region(&r[2], gamma, Some(kappa), None)).collect::<bdlab_core::Result<Vec<_>>>()?;
    let frac = zeros.iter().filter(|&&c| c == 0).count() as f64 / zeros.len().max(1) as f64;
    rep.push(Check::new("negative_rate_region_empty_fraction", frac, ">= 0.95", frac >= 0.95 && dk < 0.0).note(format!("Delta(1,2) = {dk:.4}")));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_membership() {
        let mut all: Vec<u8> = SUITES.iter().filter(|s| **s != "all").flat_map(|s| criteria_of(s).unwrap().iter().copied()).collect();
        all.sort_unstable();
        assert_eq!(all, criteria_of("all").unwrap());
        assert!(criteria_of("bogus").is_none());
    }

    #[test]
    fn scale_override() {
        assert_eq!(Scale::full().n(10_000), (10_000, false));
        assert_eq!(Scale { replicas: Some(10) }.n(10_000), (10, true));
        assert_eq!(Scale { replicas: Some(50_000) }.n(10_000), (50_000, false));
    }

    #[test]
    fn deterministic_criteria_are_reproducible() {
        let a = run_criterion(3, Scale::full(), 1).unwrap();
        let b = run_criterion(3, Scale::full(), 2).unwrap();
        assert!(a.passed());
        assert_eq!(a.checks, b.checks);
    }
}
