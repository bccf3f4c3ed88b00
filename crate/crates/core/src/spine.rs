//! Simulation under the spine change of measure.
//!
//! Under the tilted measure one distinguished line of descent, the spine,
//! has an outward-drifting OU type `dη = μ_λ η ds + √θ dB`, a spatial drift
//! `λ·a·η²`, and splits at the doubled rate `2R(η)`. At each split one child
//! carries the spine on, chosen uniformly, and the other roots an ordinary
//! subtree. Reweighting by `Z⁺_λ(0)/Z⁺_λ(τ)` gives unbiased estimates of
//! probabilities under the original law.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when a dependent links std
use num_traits::Float;

use crate::analytics::theta_cost;
use crate::martingale::{log_term, z_value};
use crate::paths::{optimal_paths, tau_of_t, AscentSpec};
use crate::rng::{child_key, root_key, Philox};
use crate::sim::{
    ou_step, snapshot_of, step_size, Engine, Live, Particle, PopulationSnapshot, RecordedTree, SimConfig,
    TracePoint,
};
use crate::spectral::{lambda_min, Sign};
use crate::stats::{log_sum_exp, median};
use crate::{Error, EstimatorResult, Label, ModelParams, Result, SpectralQuantities};

/// One recorded spine state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinePoint {
    pub s: f64,
    pub xi: f64,
    pub eta: f64,
    pub is_birth: bool,
}

/// What to simulate besides the spine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpineOptions {
    /// Skip the ordinary subtrees.
    pub spine_only: bool,
    /// Keep every spine step in `spine_path`.
    pub record_path: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpineRun {
    pub lambda: f64,
    pub tau: f64,
    pub start: (f64, f64),
    pub spine_path: Vec<SpinePoint>,
    /// `(S, ξ_S, η_S)` at each spine birth, in time order.
    pub births: Vec<(f64, f64, f64)>,
    pub n_tau: usize,
    /// Final spine position `(ξ_τ, η_τ)`.
    pub spine_end: (f64, f64),
    /// Whole population at τ (spine included); `None` for spine-only runs or
    /// when the cap was hit.
    pub snapshot: Option<PopulationSnapshot>,
    pub truncated: bool,
    pub trace: Option<RecordedTree>,
}

impl SpineRun {
    pub fn birth_times(&self) -> Vec<f64> {
        self.births.iter().map(|b| b.0).collect()
    }
}

/// Exact outward-OU transition over `h`: mean `η e^{μh}`, variance `θ(e^{2μh} − 1)/(2μ)`.
#[inline]
pub fn outward_ou_step(theta: f64, mu: f64, eta: f64, h: f64, z: f64) -> f64 {
    eta * (mu * h).exp() + (theta * (2.0 * mu * h).exp_m1() / (2.0 * mu)).sqrt() * z
}

/// Simulates the spine over `[0, tau]` and, unless spine-only, the ordinary
/// subtrees it sheds, all keyed from `cfg.seed`.
pub fn run_spine(
    p: &ModelParams,
    lambda: f64,
    start: (f64, f64),
    tau: f64,
    cfg: &SimConfig,
    opts: SpineOptions,
) -> Result<SpineRun> {
    let lmin = lambda_min(p);
    if !(lambda > lmin && lambda < 0.0) {
        return Err(Error::LambdaOutOfRange { lambda, lambda_min: lmin });
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::DegenerateTau(tau));
    }
    cfg.validate()?;
    let s = SpectralQuantities::new(p, lambda)?;
    let mu = s.mu;
    let mut engine = Engine::new(p, cfg);
    let spacing = engine.trace.as_ref().map(|t| t.spacing);

    let mut label = Label::root();
    let mut key = root_key(cfg.seed);
    let mut rng = Philox::new(key);
    let (mut xi, mut eta) = start;
    let mut t = 0.0;
    let mut node = usize::MAX;
    let mut next_grid = 0u64;
    if let Some(tr) = engine.trace.as_mut() {
        node = tr.push(None, label.clone());
        tr.nodes[node].points.push(TracePoint { t: 0.0, x: xi, y: eta });
        next_grid = 1;
    }

    let mut spine_path = Vec::new();
    if opts.record_path {
        spine_path.push(SpinePoint { s: 0.0, xi, eta, is_birth: false });
    }
    let mut births = Vec::new();
    let mut roots: Vec<Live> = Vec::new();
    let mut truncated = false;

    while t < tau {
        let mut end = tau;
        if let Some(g) = spacing {
            end = end.min(next_grid as f64 * g);
        }
        let remaining = end - t;
        // doubled rate halves the step
        let h = step_size(p, cfg.h_max, 0.5 * cfg.c_step, eta, remaining);
        let eta1 = outward_ou_step(p.theta(), mu, eta, h, rng.normal());
        let int_eta2 = 0.5 * h * (eta * eta + eta1 * eta1);
        let v = p.a() * int_eta2;
        xi += lambda * v + v.sqrt() * rng.normal();
        eta = eta1;
        let k = rng.poisson(2.0 * (p.rho() * h + p.r() * int_eta2));
        t = if h == remaining { end } else { t + h };
        if let (Some(g), Some(tr)) = (spacing, engine.trace.as_mut()) {
            if t == next_grid as f64 * g {
                tr.nodes[node].points.push(TracePoint { t, x: xi, y: eta });
                next_grid += 1;
            }
        }
        for _ in 0..k {
            let digit: u8 = if rng.bernoulli(0.5) { 1 } else { 2 };
            let other = 3 - digit;
            births.push((t, xi, eta));
            if !opts.spine_only && !truncated {
                if roots.len() + 2 > cfg.cap {
                    truncated = true;
                } else {
                    let sib = Live::new(label.child(other), child_key(key, other), xi, eta, t);
                    let parent = engine.trace.as_ref().map(|_| node);
                    roots.push(engine.add_root(sib, parent));
                }
            }
            label = label.child(digit);
            key = child_key(key, digit);
            rng = Philox::new(key);
            if let Some(tr) = engine.trace.as_mut() {
                node = tr.push(Some(node), label.clone());
            }
        }
        if opts.record_path {
            spine_path.push(SpinePoint { s: t, xi, eta, is_birth: k > 0 });
        }
    }

    let spine_particle = Particle { label: label.clone(), x: xi, y: eta, born_at: births.last().map_or(0.0, |b| b.0) };
    let mut snapshot = None;
    if !opts.spine_only && !truncated {
        if engine.advance_to(&mut roots, tau, 1) {
            snapshot = Some(snapshot_of(&roots, tau, Some(spine_particle)));
        } else {
            truncated = true;
        }
    }
    let trace = engine.trace.take().map(|mut tr| {
        if !truncated {
            tr.leaves = roots.iter().map(|l| l.node).collect();
            tr.leaves.push(node);
        }
        tr
    });
    Ok(SpineRun {
        lambda,
        tau,
        start,
        spine_path,
        n_tau: births.len(),
        births,
        spine_end: (xi, eta),
        snapshot,
        truncated,
        trace,
    })
}

/// Mean spine birth count over `[0, τ]` from type `y0`:
/// `2r y0²(e^{2μτ} − 1)/(2μ) + (rθ/μ)((e^{2μτ} − 1)/(2μ) − τ) + 2ρτ`.
pub fn spine_birth_mean(p: &ModelParams, lambda: f64, y0: f64, tau: f64) -> Result<f64> {
    let mu = SpectralQuantities::new(p, lambda)?.mu;
    let g = (2.0 * mu * tau).exp_m1() / (2.0 * mu);
    Ok(2.0 * p.r() * y0 * y0 * g + p.r() * p.theta() / mu * (g - tau) + 2.0 * p.rho() * tau)
}

/// `log ζ̃ = ψ⁺η² + n log 2 + λξ − E⁺t`.
pub fn zeta_tilde(p: &ModelParams, lambda: f64, state: (f64, f64, u64, f64)) -> Result<f64> {
    let (xi, eta, n, t) = state;
    let s = SpectralQuantities::new(p, lambda)?;
    Ok(log_term(&s, Sign::Plus, xi, eta, t) + n as f64 * core::f64::consts::LN_2)
}

/// A single tagged line of descent under the original law: at each split
/// the line follows one child. Returns `(ξ_t, η_t, n_t)`.
pub fn tagged_line(p: &ModelParams, start: (f64, f64), t: f64, h_max: f64, c_step: f64, key: u64) -> (f64, f64, u64) {
    let mut rng = Philox::new(key);
    let (mut x, mut y) = start;
    let mut s = 0.0;
    let mut n = 0;
    while s < t {
        let remaining = t - s;
        let h = step_size(p, h_max, c_step, y, remaining);
        let y1 = ou_step(p.theta(), y, h, rng.normal());
        let int_y2 = 0.5 * h * (y * y + y1 * y1);
        x += (p.a() * int_y2).sqrt() * rng.normal();
        y = y1;
        n += rng.poisson(p.rho() * h + p.r() * int_y2);
        s = if h == remaining { t } else { s + h };
    }
    (x, y, n)
}

/// `log` of the importance weight `Z⁺_λ(0)/Z⁺_λ(τ)` of a full spine run.
pub fn log_weight(p: &ModelParams, run: &SpineRun) -> Result<f64> {
    let snap = run.snapshot.as_ref().ok_or(Error::EmptySnapshot)?;
    let z0 = log_term(&SpectralQuantities::new(p, run.lambda)?, Sign::Plus, run.start.0, run.start.1, 0.0);
    Ok(z0 - z_value(snap, p, run.lambda, Sign::Plus)?)
}

/// One importance-sampling draw: `Some(1_event · weight)`, or `None` when the
/// replica hit the cap.
pub fn importance_sample<E: Fn(&SpineRun) -> bool>(
    p: &ModelParams,
    lambda: f64,
    event: &E,
    tau: f64,
    start: (f64, f64),
    cfg: &SimConfig,
) -> Result<Option<(f64, f64)>> {
    let run = run_spine(p, lambda, start, tau, cfg, SpineOptions::default())?;
    if run.truncated {
        return Ok(None);
    }
    let lw = log_weight(p, &run)?;
    let v = if event(&run) { lw.exp() } else { 0.0 };
    Ok(Some((v, lw)))
}

/// Importance-sampling estimate with weight diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsEstimate {
    pub result: EstimatorResult,
    pub discarded: usize,
    pub log_weight_min: f64,
    pub log_weight_median: f64,
    pub log_weight_max: f64,
    /// More than 1% of replicas were discarded at the cap.
    pub flagged: bool,
}

impl IsEstimate {
    /// Assembles the estimate from per-replica draws in replica order.
    pub fn from_draws(draws: &[Option<(f64, f64)>], seed: u64) -> Self {
        let kept: Vec<(f64, f64)> = draws.iter().flatten().copied().collect();
        let vals: Vec<f64> = kept.iter().map(|d| d.0).collect();
        let lws: Vec<f64> = kept.iter().map(|d| d.1).collect();
        let discarded = draws.len() - kept.len();
        IsEstimate {
            result: EstimatorResult::from_samples(&vals, seed),
            discarded,
            log_weight_min: lws.iter().copied().fold(f64::INFINITY, f64::min),
            log_weight_median: median(&lws),
            log_weight_max: lws.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            flagged: discarded * 100 > draws.len(),
        }
    }
}

/// Sequential importance-sampling estimate of `P(event)` over `replicas`
/// spine runs.
pub fn importance_estimate<E: Fn(&SpineRun) -> bool>(
    p: &ModelParams,
    lambda: f64,
    event: E,
    tau: f64,
    start: (f64, f64),
    cfg: &SimConfig,
    replicas: usize,
) -> Result<IsEstimate> {
    let mut cfg = cfg.clone();
    cfg.horizon = tau;
    cfg.snapshot_times = vec![tau];
    cfg.validate()?;
    let draws = (0..replicas)
        .map(|i| importance_sample(p, lambda, &event, tau, start, &cfg.for_replica(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(IsEstimate::from_draws(&draws, cfg.seed))
}

/// Tube event around the optimal ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortClimbSpec {
    /// Type tube half-width in units of `√t`.
    pub epsilon: f64,
    /// Space tube half-width in units of `t`.
    pub delta: f64,
    pub t: f64,
    pub beta: f64,
    pub kappa: f64,
}

/// Finest grid spacing accepted for tube checks.
pub const MAX_TUBE_SPACING: f64 = 1.0 / 64.0;

impl ShortClimbSpec {
    pub fn new(epsilon: f64, delta: f64, t: f64, beta: f64, kappa: f64) -> Result<Self> {
        if !(epsilon > 0.0 && delta > 0.0) {
            return Err(Error::DomainError("tube widths must be positive"));
        }
        AscentSpec::new(beta, kappa, t)?;
        Ok(Self { epsilon, delta, t, beta, kappa })
    }

    /// `(λ̄, τ)`: the ascent optimizer and the clock at `t`.
    pub fn lambda_tau(&self, p: &ModelParams) -> Result<(f64, f64)> {
        let lambda = theta_cost(p, self.beta, self.kappa)?.lambda_bar;
        if lambda == 0.0 {
            return Err(Error::DomainError("beta must be positive for a spatial ascent"));
        }
        Ok((lambda, tau_of_t(p, lambda, self.t)?))
    }
}

/// Whether some recorded lineage stays within `ε√t` of the optimal type
/// path and `δt` of the optimal spatial path at every grid time in `[0, τ]`.
pub fn short_climb_indicator(tree: &RecordedTree, spec: &ShortClimbSpec, p: &ModelParams) -> Result<bool> {
    if tree.spacing > MAX_TUBE_SPACING {
        return Err(Error::GridTooCoarse { spacing: tree.spacing, max: MAX_TUBE_SPACING });
    }
    let (lambda, tau) = spec.lambda_tau(p)?;
    let asc = optimal_paths(p, AscentSpec::new(spec.beta, spec.kappa, spec.t)?, lambda, tau)?;
    let ey = spec.epsilon * spec.t.sqrt();
    let dx = spec.delta * spec.t;
    let slack = 1e-9 * tau;
    Ok(tree.any_lineage(|pt| {
        pt.t > tau + slack || ((pt.y - asc.y(pt.t).value).abs() < ey && (pt.x - asc.x(pt.t).value).abs() < dx)
    }))
}

/// The two parts of the conditional mean of `Z⁺_λ(τ)` given the spine:
/// `(log Σ_births v⁺(η_S)e^{λξ_S − E⁺S}, log v⁺(η_τ)e^{λξ_τ − E⁺τ})`.
/// The first is `-inf` when the spine never split.
pub fn spine_decomposition_value(run: &SpineRun, p: &ModelParams, lambda: f64) -> Result<(f64, f64)> {
    let s = SpectralQuantities::new(p, lambda)?;
    let sum = log_sum_exp(run.births.iter().map(|&(t, x, y)| log_term(&s, Sign::Plus, x, y, t)));
    let spine = log_term(&s, Sign::Plus, run.spine_end.0, run.spine_end.1, run.tau);
    Ok((sum, spine))
}
