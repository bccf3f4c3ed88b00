//! Time-inhomogeneous linear birth–death process started from one individual.
//!
//! With birth rate `λ(s)`, death rate `μ(s)` and `ν(s) = ∫₀ˢ (μ − λ)`, the
//! population at τ is zero with probability `U`, and otherwise geometric on
//! `{1, 2, …}` with ratio `V`, where
//! `W = e^{−ν(τ)}(1 + ∫₀^τ μe^ν)`, `U = 1 − e^{−ν(τ)}/W` and `V = 1 − 1/W`.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when a dependent links std
use num_traits::Float;

use crate::paths::{integrand, OptimalAscent};
use crate::quad::simpson_richardson;
use crate::rng::{replica_seed, Philox};
use crate::{Error, ModelParams, Result};

/// Panels used for `ν` and `∫μe^ν`.
pub const SCHEDULE_PANELS: usize = 1 << 12;
/// Cells of the piecewise-constant thinning majorant.
pub const MAJORANT_CELLS: usize = 1024;
const MAJORANT_SAFETY: f64 = 1.05;
/// The survival approximation is reported as applicable once `L` reaches this.
pub const APPROX_MIN_L: f64 = 5.0;

/// Per-capita birth and death rates on `[0, horizon]`.
pub trait RateSchedule {
    fn horizon(&self) -> f64;
    fn birth(&self, s: f64) -> f64;
    fn death(&self, s: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantRates {
    pub birth: f64,
    pub death: f64,
    pub horizon: f64,
}

impl ConstantRates {
    pub fn new(birth: f64, death: f64, horizon: f64) -> Result<Self> {
        if !(birth >= 0.0 && death >= 0.0 && birth.is_finite() && death.is_finite()) {
            return Err(Error::InvalidSchedule("rates must be finite and non-negative"));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidSchedule("horizon must be finite and non-negative"));
        }
        Ok(Self { birth, death, horizon })
    }
}

impl RateSchedule for ConstantRates {
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn birth(&self, _: f64) -> f64 {
        self.birth
    }
    fn death(&self, _: f64) -> f64 {
        self.death
    }
}

/// Rates given by closures.
#[derive(Debug, Clone, Copy)]
pub struct FnSchedule<B, D> {
    pub birth: B,
    pub death: D,
    pub horizon: f64,
}

impl<B: Fn(f64) -> f64, D: Fn(f64) -> f64> RateSchedule for FnSchedule<B, D> {
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn birth(&self, s: f64) -> f64 {
        (self.birth)(s)
    }
    fn death(&self, s: f64) -> f64 {
        (self.death)(s)
    }
}

/// Rates seen by a lineage forced along an ascent: births `ρ + ry(s)²` and
/// deaths `(ẏ + θy/2)²/(2θ) + ẋ²/(2ay²)`, so that `ν` is the path functional J.
#[derive(Debug, Clone, Copy)]
pub struct AscentSchedule<'a> {
    pub params: &'a ModelParams,
    pub ascent: &'a OptimalAscent,
}

impl RateSchedule for AscentSchedule<'_> {
    fn horizon(&self) -> f64 {
        self.ascent.tau
    }
    fn birth(&self, s: f64) -> f64 {
        self.params.branch_rate(self.ascent.y(s).value)
    }
    fn death(&self, s: f64) -> f64 {
        if s <= 0.0 {
            // spatial term vanishes in the limit; only the type term is left
            let d = self.ascent.y(0.0).deriv;
            return d * d / (2.0 * self.params.theta());
        }
        let a = self.ascent;
        integrand(self.params, &a.x_path(), &a.y_path(), s).unwrap_or(f64::NAN) + self.birth(s)
    }
}

/// `ν(s) = ∫₀ˢ (μ − λ)` by Richardson-extrapolated Simpson.
pub fn nu<S: RateSchedule + ?Sized>(schedule: &S, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    simpson_richardson(|w| schedule.death(w) - schedule.birth(w), 0.0, s, 1 << 14).value
}

/// Closed-form law of the population at the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdOutcome {
    pub w_tau: f64,
    pub u_tau: f64,
    pub v_tau: f64,
    pub extinction_prob: f64,
    /// `E M(τ) = e^{−ν(τ)}`.
    pub mean: f64,
    /// `E[M(τ) | M(τ) ≥ 1] = W`.
    pub conditional_mean: f64,
    pub nu_tau: f64,
    /// `∫₀^τ μe^ν`.
    pub death_integral: f64,
}

impl BdOutcome {
    /// `P(M = n)`.
    pub fn pmf(&self, n: u64) -> f64 {
        if n == 0 {
            self.u_tau
        } else {
            (1.0 - self.u_tau) * (1.0 - self.v_tau) * self.v_tau.powi((n - 1) as i32)
        }
    }

    /// `pmf(0..=n_max)`.
    pub fn pmf_table(&self, n_max: u64) -> Vec<f64> {
        (0..=n_max).map(|n| self.pmf(n)).collect()
    }

    /// `P(M > n)`.
    pub fn tail(&self, n: u64) -> f64 {
        (1.0 - self.u_tau) * self.v_tau.powi(n as i32)
    }

    /// `Σ n·pmf(n)` summed as a geometric series.
    pub fn mean_from_pmf(&self) -> f64 {
        (1.0 - self.u_tau) / (1.0 - self.v_tau)
    }
}

/// `ν` at `n + 1` equally spaced nodes (per-panel Simpson), and the step.
fn nu_nodes<S: RateSchedule + ?Sized>(schedule: &S, n: usize) -> (Vec<f64>, f64) {
    let tau = schedule.horizon();
    let h = tau / n as f64;
    let g = |s: f64| schedule.death(s) - schedule.birth(s);
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut left = g(0.0);
    for i in 0..n {
        let a = h * i as f64;
        let right = g(a + h);
        let v = out[i] + h / 6.0 * (left + 4.0 * g(a + 0.5 * h) + right);
        out.push(v);
        left = right;
    }
    (out, h)
}

fn death_integral<S: RateSchedule + ?Sized>(schedule: &S, nus: &[f64], h: f64, shift: f64) -> f64 {
    let n = nus.len() - 1;
    let f = |i: usize| schedule.death(h * i as f64) * (nus[i] - shift).exp();
    let mut acc = f(0) + f(n);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 * f(i) } else { 2.0 * f(i) };
    }
    acc * h / 3.0
}

pub fn outcome_distribution<S: RateSchedule + ?Sized>(schedule: &S) -> Result<BdOutcome> {
    let tau = schedule.horizon();
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidSchedule("horizon must be finite and non-negative"));
    }
    let (nus, h) = if tau > 0.0 { nu_nodes(schedule, SCHEDULE_PANELS) } else { (alloc::vec![0.0, 0.0], 0.0) };
    let nu_tau = *nus.last().expect("nodes");
    if !nu_tau.is_finite() {
        return Err(Error::InvalidSchedule("rates are not finite on the horizon"));
    }
    let integral = if tau > 0.0 { death_integral(schedule, &nus, h, 0.0) } else { 0.0 };
    let w = (-nu_tau).exp() * (1.0 + integral);
    let u = integral / (1.0 + integral);
    let v = 1.0 - nu_tau.exp() / (1.0 + integral);
    Ok(BdOutcome {
        w_tau: w,
        u_tau: u,
        v_tau: v.max(0.0),
        extinction_prob: u,
        mean: (-nu_tau).exp(),
        conditional_mean: w,
        nu_tau,
        death_integral: integral,
    })
}

/// Exact survival probability against the rough approximation `K e^{−L}`
/// with `L = sup ν` and `K⁻¹ = ∫ μ e^{−(L − ν)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalApprox {
    pub exact: f64,
    pub approx: f64,
    pub k_tau: f64,
    pub l_value: f64,
    pub ratio: f64,
    /// `L ≥ APPROX_MIN_L`; the approximation presumes a large L.
    pub applicable: bool,
}

pub fn survival_approximation<S: RateSchedule + ?Sized>(schedule: &S) -> Result<SurvivalApprox> {
    let tau = schedule.horizon();
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidSchedule("horizon must be positive"));
    }
    let (nus, h) = nu_nodes(schedule, SCHEDULE_PANELS);
    let l = nus.iter().copied().fold(0.0, f64::max);
    let k_inv = death_integral(schedule, &nus, h, l);
    let k = 1.0 / k_inv;
    let integral = death_integral(schedule, &nus, h, 0.0);
    let exact = 1.0 / (1.0 + integral);
    let approx = k * (-l).exp();
    Ok(SurvivalApprox { exact, approx, k_tau: k, l_value: l, ratio: exact / approx, applicable: l >= APPROX_MIN_L })
}

/// Piecewise-constant majorant of `λ + μ` on `cells` cells.
fn majorant<S: RateSchedule + ?Sized>(schedule: &S, cells: usize) -> Vec<f64> {
    let tau = schedule.horizon();
    let w = tau / cells as f64;
    (0..cells)
        .map(|c| {
            let a = w * c as f64;
            (0..=8)
                .map(|k| {
                    let s = a + w * k as f64 / 8.0;
                    schedule.birth(s) + schedule.death(s)
                })
                .fold(0.0, f64::max)
                * MAJORANT_SAFETY
        })
        .collect()
}

/// Population at the horizon for one replica, by thinning against the majorant.
pub fn simulate_bd_once<S: RateSchedule + ?Sized>(schedule: &S, bound: &[f64], rng: &mut Philox) -> Result<u64> {
    let tau = schedule.horizon();
    let cells = bound.len();
    let w = tau / cells as f64;
    let mut n: u64 = 1;
    let mut s = 0.0;
    let mut cell = 0;
    while cell < cells && n > 0 {
        let cell_end = if cell + 1 == cells { tau } else { w * (cell + 1) as f64 };
        let lam = bound[cell];
        if lam <= 0.0 {
            s = cell_end;
            cell += 1;
            continue;
        }
        let next = s + rng.exponential() / (n as f64 * lam);
        if next >= cell_end {
            s = cell_end;
            cell += 1;
            continue;
        }
        s = next;
        let (b, d) = (schedule.birth(s), schedule.death(s));
        if b + d > lam {
            return Err(Error::MajorantViolation { s, rate: b + d, bound: lam });
        }
        let u = rng.uniform() * lam;
        if u < b {
            n += 1;
        } else if u < b + d {
            n -= 1;
        }
    }
    Ok(n)
}

/// Populations at the horizon for `replicas` independent runs.
pub fn simulate_bd<S: RateSchedule + ?Sized>(schedule: &S, seed: u64, replicas: usize) -> Result<Vec<u64>> {
    let bound = majorant(schedule, MAJORANT_CELLS);
    (0..replicas)
        .map(|i| simulate_bd_once(schedule, &bound, &mut Philox::new(replica_seed(seed, i as u64))))
        .collect()
}

/// Majorant used by [`simulate_bd`], exposed for parallel callers.
pub fn thinning_majorant<S: RateSchedule + ?Sized>(schedule: &S) -> Vec<f64> {
    majorant(schedule, MAJORANT_CELLS)
}
