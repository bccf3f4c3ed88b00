//! Single-particle expectation oracles for the branching population.
//!
//! `E Σ_u f(X_u, Y_u)` at time t is estimated without simulating a tree:
//! once as `E[exp(∫R(η)) f(ξ_t, η_t)]` along one line under the original
//! motion, and once under the transformed law where the type is an OU with
//! rate `μ_λ` and the space coordinate drifts at `λ` per unit clock.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when a dependent links std
use num_traits::Float;

use crate::rng::{replica_seed, Philox};
use crate::sim::step_size;
use crate::spectral::{Sign, SpectralQuantities};
use crate::stats::{mean_var, EstimatorResult};
use crate::{Error, ModelParams, Result};

/// Weight tail ratio `max/mean` above which an estimate is flagged.
pub const UNBOUNDED_WEIGHT_RATIO: f64 = 1e4;

/// Step rule and replication of a single-particle estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub h_max: f64,
    pub c_step: f64,
    pub replicas: usize,
    pub seed: u64,
}

impl OracleConfig {
    pub fn new(h_max: f64, c_step: f64, replicas: usize, seed: u64) -> Result<Self> {
        if !(h_max > 0.0 && h_max <= 0.5) {
            return Err(Error::InvalidConfig("h_max must lie in (0, 0.5]"));
        }
        if !(c_step > 0.0 && c_step <= 0.2) {
            return Err(Error::InvalidConfig("c_step must lie in (0, 0.2]"));
        }
        if replicas < 2 {
            return Err(Error::InvalidConfig("at least two replicas are required"));
        }
        Ok(Self { h_max, c_step, replicas, seed })
    }
}

/// A test function with a declared bound on `|f|` (infinite when unbounded).
#[derive(Debug, Clone, Copy)]
pub struct Bounded<F> {
    pub f: F,
    pub bound: f64,
}

impl<F: Fn(f64, f64) -> f64> Bounded<F> {
    pub fn new(f: F, bound: f64) -> Self {
        Self { f, bound }
    }

    pub fn unbounded(f: F) -> Self {
        Self { f, bound: f64::INFINITY }
    }

    fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let v = (self.f)(x, y);
        if v.is_nan() || v.abs() > self.bound {
            return Err(Error::DomainError("test function exceeds its declared bound"));
        }
        Ok(v)
    }
}

/// Estimate with the weight diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub result: EstimatorResult,
    /// Largest weight over the mean weight.
    pub weight_ratio: f64,
    pub unbounded_weight: bool,
    /// Empirical variance of the weighted samples.
    pub variance: f64,
}

impl OracleEstimate {
    fn from_parts(samples: &[f64], weights: &[f64], seed: u64) -> Self {
        let (wm, _) = mean_var(weights);
        let wmax = weights.iter().copied().fold(0.0, f64::max);
        let ratio = if wm > 0.0 { wmax / wm } else { f64::INFINITY };
        let (_, var) = mean_var(samples);
        Self {
            result: EstimatorResult::from_samples(samples, seed),
            weight_ratio: ratio,
            unbounded_weight: ratio > UNBOUNDED_WEIGHT_RATIO,
            variance: var,
        }
    }
}

/// Exact OU transition with mean reversion `rate` and noise `√θ`.
#[inline]
pub fn reverting_ou_step(theta: f64, rate: f64, y: f64, h: f64, z: f64) -> f64 {
    let sd = (-theta * (-2.0 * rate * h).exp_m1() / (2.0 * rate)).sqrt();
    y * (-rate * h).exp() + sd * z
}

/// One line of the single-particle law: `(ξ_t, η_t, ∫η², ∫R(η))`.
fn single_line(
    p: &ModelParams,
    rate: f64,
    drift: f64,
    t: f64,
    start: (f64, f64),
    cfg: &OracleConfig,
    rng: &mut Philox,
) -> (f64, f64, f64, f64) {
    let (mut x, mut y) = start;
    let (mut s, mut iy2, mut ir) = (0.0, 0.0, 0.0);
    while s < t {
        let remaining = t - s;
        let h = step_size(p, cfg.h_max, cfg.c_step, y, remaining);
        let y1 = reverting_ou_step(p.theta(), rate, y, h, rng.normal());
        let dy2 = 0.5 * h * (y * y + y1 * y1);
        let v = p.a() * dy2;
        x += drift * v + v.sqrt() * rng.normal();
        ir += p.rho() * h + p.r() * dy2;
        iy2 += dy2;
        y = y1;
        s = if h == remaining { t } else { s + h };
    }
    (x, y, iy2, ir)
}

/// `E Σ_u f(X_u(t), Y_u(t))` as the mean of `exp(∫R(η)) f(ξ_t, η_t)` along
/// one line with the original type motion.
pub fn many_to_one_expectation<F: Fn(f64, f64) -> f64>(
    p: &ModelParams,
    f: &Bounded<F>,
    t: f64,
    start: (f64, f64),
    cfg: &OracleConfig,
) -> Result<OracleEstimate> {
    check_time(t)?;
    let mut samples = Vec::with_capacity(cfg.replicas);
    let mut weights = Vec::with_capacity(cfg.replicas);
    for i in 0..cfg.replicas {
        let mut rng = Philox::new(replica_seed(cfg.seed, i as u64));
        let (x, y, _, ir) = single_line(p, 0.5 * p.theta(), 0.0, t, start, cfg, &mut rng);
        let w = ir.exp();
        samples.push(w * f.eval(x, y)?);
        weights.push(w);
    }
    Ok(OracleEstimate::from_parts(&samples, &weights, cfg.seed))
}

/// The same expectation under the transformed law for `λ ∈ (λmin, 0)`:
/// mean of `exp(−λ(ξ_t − x₀) − ψ⁻(η_t² − y₀²) + E⁻t) f(ξ_t, η_t)`.
pub fn transformed_expectation<F: Fn(f64, f64) -> f64>(
    p: &ModelParams,
    lambda: f64,
    f: &Bounded<F>,
    t: f64,
    start: (f64, f64),
    cfg: &OracleConfig,
) -> Result<OracleEstimate> {
    check_time(t)?;
    let sq = SpectralQuantities::new(p, lambda)?;
    let psi = sq.psi(Sign::Minus);
    let e = sq.eigenvalue(Sign::Minus);
    let mut samples = Vec::with_capacity(cfg.replicas);
    let mut weights = Vec::with_capacity(cfg.replicas);
    for i in 0..cfg.replicas {
        let mut rng = Philox::new(replica_seed(cfg.seed, i as u64));
        let (x, y, _, _) = single_line(p, sq.mu, lambda, t, start, cfg, &mut rng);
        let lw = -lambda * (x - start.0) - psi * (y * y - start.1 * start.1) + e * t;
        let w = lw.exp();
        samples.push(w * f.eval(x, y)?);
        weights.push(w);
    }
    Ok(OracleEstimate::from_parts(&samples, &weights, cfg.seed))
}

/// Closed-form `E|N_t|` from a single particle at type `y0`.
pub fn expected_population(p: &ModelParams, t: f64, start_y: f64) -> Result<f64> {
    check_time(t)?;
    let sq = SpectralQuantities::new(p, 0.0)?;
    let psi = sq.psi(Sign::Minus);
    let mu = sq.mu;
    let m = start_y * (-mu * t).exp();
    let var = -p.theta() * (-2.0 * mu * t).exp_m1() / (2.0 * mu);
    let d = 1.0 + 2.0 * psi * var;
    Ok((psi * start_y * start_y + sq.eigenvalue(Sign::Minus) * t - psi * m * m / d).exp() / d.sqrt())
}

/// Asymptotic spatial speed `λaθ/(2μ_λ)` under the transformed law.
pub fn lln_drift(p: &ModelParams, lambda: f64) -> Result<f64> {
    let sq = SpectralQuantities::new(p, lambda)?;
    Ok(lambda * p.a() * p.theta() / (2.0 * sq.mu))
}

/// Replica mean of `(ξ_t − x₀)/t` under the transformed law.
pub fn drift_estimate(p: &ModelParams, lambda: f64, t: f64, start: (f64, f64), cfg: &OracleConfig) -> Result<EstimatorResult> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::DomainError("time must be positive"));
    }
    let sq = SpectralQuantities::new(p, lambda)?;
    let samples: Vec<f64> = (0..cfg.replicas)
        .map(|i| {
            let mut rng = Philox::new(replica_seed(cfg.seed, i as u64));
            (single_line(p, sq.mu, lambda, t, start, cfg, &mut rng).0 - start.0) / t
        })
        .collect();
    Ok(EstimatorResult::from_samples(&samples, cfg.seed))
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::DomainError("time must be finite and non-negative"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(replicas: usize, seed: u64) -> OracleConfig {
        OracleConfig::new(0.05, 0.01, replicas, seed).unwrap()
    }

    #[test]
    fn expected_population_values() {
        let p = ModelParams::p0();
        assert_relative_eq!(expected_population(&p, 1.0, 0.0).unwrap(), 8.5296339722765858, max_relative = 1e-13);
        assert_eq!(expected_population(&p, 0.0, 0.0).unwrap(), 1.0);
        let q = ModelParams::new(10.0, 1.0, 0.0, 0.7).unwrap();
        assert_relative_eq!(expected_population(&q, 2.0, 1.3).unwrap(), (1.4f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn deterministic_weight_without_type_breeding() {
        let q = ModelParams::new(10.0, 1.0, 0.0, 0.7).unwrap();
        let one = Bounded::new(|_: f64, _: f64| 1.0, 1.0);
        let e = many_to_one_expectation(&q, &one, 1.5, (0.0, 0.4), &cfg(50, 1)).unwrap();
        assert_relative_eq!(e.result.estimate, (1.05f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn zero_variance_transform() {
        let p = ModelParams::p0();
        let lambda = -0.3;
        let sq = SpectralQuantities::new(&p, lambda).unwrap();
        let psi = sq.psi(Sign::Minus);
        let f = Bounded::unbounded(move |x: f64, y: f64| (lambda * x + psi * y * y).exp());
        let start = (0.2, 0.5);
        let e = transformed_expectation(&p, lambda, &f, 1.0, start, &cfg(200, 4)).unwrap();
        assert!(e.variance < 1e-20);
        let expect = (lambda * start.0 + psi * start.1 * start.1 + sq.eigenvalue(Sign::Minus)).exp();
        assert_relative_eq!(e.result.estimate, expect, max_relative = 1e-12);
    }

    #[test]
    fn both_oracles_match_closed_form() {
        let p = ModelParams::p0();
        let one = Bounded::new(|_: f64, _: f64| 1.0, 1.0);
        let target = expected_population(&p, 1.0, 0.0).unwrap();
        let a = many_to_one_expectation(&p, &one, 1.0, (0.0, 0.0), &cfg(4000, 7)).unwrap();
        let b = transformed_expectation(&p, -0.3, &one, 1.0, (0.0, 0.0), &cfg(4000, 8)).unwrap();
        assert!(a.result.covers(target, 4.0), "{:?}", a.result);
        assert!(b.result.covers(target, 4.0), "{:?}", b.result);
        assert!(!a.unbounded_weight);
    }

    #[test]
    fn declared_bound_is_enforced() {
        let p = ModelParams::p0();
        let f = Bounded::new(|_: f64, _: f64| 2.0, 1.0);
        assert!(many_to_one_expectation(&p, &f, 0.5, (0.0, 0.0), &cfg(4, 1)).is_err());
    }

    #[test]
    fn ou_step_moments() {
        let (theta, rate, y, h) = (10.0, 2.0, 1.5, 0.3);
        let m = reverting_ou_step(theta, rate, y, h, 0.0);
        assert_relative_eq!(m, y * (-rate * h).exp(), max_relative = 1e-15);
        let sd = reverting_ou_step(theta, rate, y, h, 1.0) - m;
        let var = theta * (1.0 - (-2.0 * rate * h).exp()) / (2.0 * rate);
        assert!((sd * sd - var).abs() < 1e-12);
        assert_relative_eq!(reverting_ou_step(theta, 0.5 * theta, y, h, 0.7), crate::sim::ou_step(theta, y, h, 0.7), max_relative = 1e-14);
    }

    #[test]
    fn drift_target() {
        let p = ModelParams::p0();
        let v = lln_drift(&p, -0.3).unwrap();
        let mu = 0.5 * (10.0f64 * (10.0 - 8.0 - 4.0 * 0.09)).sqrt();
        assert_relative_eq!(v, -0.3 * 10.0 / (2.0 * mu), max_relative = 1e-14);
    }
}
