//! Closed-form growth rates, wave speed and ascent costs, together with
//! numeric optimizers over λ that reproduce them independently.

use core::fmt;

#[allow(unused_imports)] // shadowed by inherent methods when a dependent links std
use num_traits::Float;

use crate::optimize::{golden_section, golden_section_max, Minimum};
use crate::spectral::{e_minus_unchecked, lambda_min, mu_unchecked, psi_plus_unchecked, Sign};
use crate::{Error, ModelParams, Result, SpectralQuantities};

/// Offset kept between the numeric search interval and the ends of `(λ_min, 0)`.
pub const SEARCH_EPS: f64 = 1e-9;
/// Bracket tolerance used by the numeric cross-checks.
pub const SEARCH_TOL: f64 = 1e-12;
/// `|Δ(γ, κ)|` below this is treated as the excluded boundary case.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// A growth rate together with the λ at which the defining infimum is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRateResult {
    pub value: f64,
    pub argmin_lambda: f64,
    pub gamma: f64,
    pub kappa: f64,
}

/// Almost-sure growth rate: finite, or the `-inf` sentinel when the
/// counted set is eventually empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthRate {
    Finite(f64),
    NegInfinity,
}

impl GrowthRate {
    pub fn is_neg_infinity(&self) -> bool {
        matches!(self, GrowthRate::NegInfinity)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            GrowthRate::Finite(v) => Some(v),
            GrowthRate::NegInfinity => None,
        }
    }
}

impl fmt::Display for GrowthRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthRate::Finite(v) => write!(f, "{v}"),
            GrowthRate::NegInfinity => f.write_str("-inf"),
        }
    }
}

/// Interval searched by the numeric optimizers.
#[inline]
pub fn search_interval(p: &ModelParams) -> (f64, f64) {
    (lambda_min(p) + SEARCH_EPS, -SEARCH_EPS)
}

fn check_nonneg(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NotFinite { name, value: v });
    }
    if v < 0.0 {
        return Err(Error::DomainError(match name {
            "gamma" => "gamma must be non-negative",
            "kappa" => "kappa must be non-negative",
            _ => "beta must be non-negative",
        }));
    }
    Ok(())
}

/// `(θ − 8r)/a`, which shows up in every closed form.
#[inline]
fn gap_over_a(p: &ModelParams) -> f64 {
    (p.theta() - 8.0 * p.r()) / p.a()
}

/// Expected growth rate of particles left of `−γt`, as the closed form of
/// `inf_λ {E⁻(λ) + λγ}`.
pub fn delta_gamma(p: &ModelParams, gamma: f64) -> Result<GrowthRateResult> {
    check_nonneg("gamma", gamma)?;
    let (theta, a) = (p.theta(), p.a());
    let value = p.rho() + theta / 4.0
        - 0.25 * (gap_over_a(p) * (4.0 * gamma * gamma + theta * a)).sqrt();
    Ok(GrowthRateResult { value, argmin_lambda: lambda_of_gamma(p, gamma), gamma, kappa: 0.0 })
}

/// The optimizing λ for speed γ (zero at γ = 0).
fn lambda_of_gamma(p: &ModelParams, gamma: f64) -> f64 {
    let (theta, a) = (p.theta(), p.a());
    -gamma * ((theta - 8.0 * p.r()) / (theta * a * a + 4.0 * a * gamma * gamma)).sqrt()
}

/// `γ_λ = −dE⁻/dλ`, the speed conjugate to λ.
fn gamma_of_lambda(p: &ModelParams, lambda: f64) -> f64 {
    let (theta, a) = (p.theta(), p.a());
    (theta * a * a * lambda * lambda / (theta - 8.0 * p.r() - 4.0 * a * lambda * lambda)).sqrt()
}

/// Direction of [`legendre_pair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegendreDirection {
    GammaToLambda,
    LambdaToGamma,
}

/// Maps a speed γ > 0 to its optimizing λ, or λ ∈ (λ_min, 0) back to γ.
pub fn legendre_pair(p: &ModelParams, x: f64, direction: LegendreDirection) -> Result<f64> {
    match direction {
        LegendreDirection::GammaToLambda => {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::DomainError("gamma must be positive and finite"));
            }
            Ok(lambda_of_gamma(p, x))
        }
        LegendreDirection::LambdaToGamma => {
            if !(x > lambda_min(p) && x < 0.0) {
                return Err(Error::DomainError("lambda must lie in (lambda_min, 0)"));
            }
            Ok(gamma_of_lambda(p, x))
        }
    }
}

/// Minimal wave speed and the λ attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSpeed {
    pub c_tilde: f64,
    pub lambda_tilde: f64,
}

pub fn wave_speed(p: &ModelParams) -> WaveSpeed {
    let (theta, a, r, rho) = (p.theta(), p.a(), p.r(), p.rho());
    let gap = theta - 8.0 * r;
    let c_tilde = (2.0 * a * (r + rho + 2.0 * (2.0 * r + rho).powi(2) / gap)).sqrt();
    let lambda_tilde = -(2.0 * gap * (theta * rho + 2.0 * rho * rho + r * theta)
        / (a * (theta + 4.0 * rho).powi(2)))
    .sqrt();
    WaveSpeed { c_tilde, lambda_tilde }
}

/// Growth rate of particles left of `−γt` with type at least `κ√t`.
pub fn delta_gamma_kappa(p: &ModelParams, gamma: f64, kappa: f64) -> Result<GrowthRateResult> {
    check_nonneg("gamma", gamma)?;
    check_nonneg("kappa", kappa)?;
    let (theta, a) = (p.theta(), p.a());
    let k2 = kappa * kappa;
    let gap = theta - 8.0 * p.r();
    let root = (theta * gap * (4.0 * a * theta * gamma * gamma + a * a * (theta + k2).powi(2))).sqrt();
    let value = p.rho() + (theta - k2) / 4.0 - root / (4.0 * theta * a);
    let argmin_lambda =
        -gamma * (theta * gap / (a * a * (k2 + theta).powi(2) + 4.0 * a * gamma * gamma * theta)).sqrt();
    Ok(GrowthRateResult { value, argmin_lambda, gamma, kappa })
}

/// Cost of a lineage climbing to `(−βt, κ√t)` inside the short ascent window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentCost {
    pub value: f64,
    pub lambda_bar: f64,
}

pub fn theta_cost(p: &ModelParams, beta: f64, kappa: f64) -> Result<AscentCost> {
    check_nonneg("beta", beta)?;
    check_nonneg("kappa", kappa)?;
    if beta == 0.0 && kappa == 0.0 {
        return Err(Error::DomainError("beta and kappa cannot both be zero"));
    }
    let (theta, a) = (p.theta(), p.a());
    let k4 = kappa.powi(4);
    let gap = theta - 8.0 * p.r();
    let inner = a * a * k4 + 4.0 * a * theta * beta * beta;
    let value = kappa * kappa / 4.0 + (theta * gap * inner).sqrt() / (4.0 * a * theta);
    let lambda_bar = -beta * (theta * gap / inner).sqrt();
    Ok(AscentCost { value, lambda_bar })
}

/// Split of the overall speed γ between the slow phase (`alpha`) and the
/// final climb (`beta`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedSplit {
    pub alpha: f64,
    pub beta: f64,
}

pub fn optimal_split(p: &ModelParams, gamma: f64, kappa: f64) -> Result<SpeedSplit> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::DomainError("gamma must be positive"));
    }
    check_nonneg("kappa", kappa)?;
    let k2 = kappa * kappa;
    let denom = p.theta() + k2;
    Ok(SpeedSplit { alpha: gamma * p.theta() / denom, beta: gamma * k2 / denom })
}

/// Almost-sure growth rate of the counts; `-inf` when the expected rate is
/// negative. Exactly zero expected rate with κ > 0 is reported as
/// [`Error::BoundaryCase`].
pub fn growth_rate_d(p: &ModelParams, gamma: f64, kappa: f64) -> Result<GrowthRate> {
    if kappa == 0.0 {
        check_nonneg("gamma", gamma)?;
        if gamma >= wave_speed(p).c_tilde {
            return Ok(GrowthRate::NegInfinity);
        }
        return Ok(GrowthRate::Finite(delta_gamma(p, gamma)?.value));
    }
    let d = delta_gamma_kappa(p, gamma, kappa)?.value;
    if d.abs() <= BOUNDARY_TOL {
        Err(Error::BoundaryCase { gamma, kappa })
    } else if d < 0.0 {
        Ok(GrowthRate::NegInfinity)
    } else {
        Ok(GrowthRate::Finite(d))
    }
}

/// Exponential decay rate of `Z±_λ(t)`, `λ(c±_λ − c*_λ)`, where `c*_λ` is the
/// minimal speed for λ ≤ λ̃ and `c⁻_λ` above it.
pub fn martingale_decay_rate(p: &ModelParams, lambda: f64, sign: Sign) -> Result<f64> {
    if lambda == 0.0 {
        return Err(Error::LambdaOutOfRange { lambda, lambda_min: lambda_min(p) });
    }
    let s = SpectralQuantities::new(p, lambda)?;
    let ws = wave_speed(p);
    // λ·c± = −E±, so everything stays free of the 1/λ in the speeds.
    let lambda_c_star = if lambda <= ws.lambda_tilde { lambda * ws.c_tilde } else { -s.e_minus };
    Ok(-s.eigenvalue(sign) - lambda_c_star)
}

/// `E⁻(λ) + λγ − κ² ψ⁺(λ)`: the objective whose infimum over λ is Δ(γ, κ).
#[inline]
pub fn growth_objective(p: &ModelParams, lambda: f64, gamma: f64, kappa: f64) -> f64 {
    e_minus_unchecked(p, lambda) + lambda * gamma - kappa * kappa * psi_plus_unchecked(p, lambda)
}

/// `κ² ψ⁺(λ) − λβ`: the objective whose supremum over λ is Θ(β, κ).
#[inline]
pub fn ascent_objective(p: &ModelParams, lambda: f64, beta: f64, kappa: f64) -> f64 {
    kappa * kappa * psi_plus_unchecked(p, lambda) - lambda * beta
}

/// Numeric `inf_λ E⁻(λ) + λγ − κ²ψ⁺(λ)` by golden-section search.
pub fn numeric_growth_rate(p: &ModelParams, gamma: f64, kappa: f64) -> Minimum {
    let (lo, hi) = search_interval(p);
    golden_section(|l| growth_objective(p, l, gamma, kappa), lo, hi, SEARCH_TOL)
}

/// Numeric `sup_λ κ²ψ⁺(λ) − λβ`.
pub fn numeric_theta_cost(p: &ModelParams, beta: f64, kappa: f64) -> Minimum {
    let (lo, hi) = search_interval(p);
    golden_section_max(|l| ascent_objective(p, l, beta, kappa), lo, hi, SEARCH_TOL)
}

/// Numeric `inf_λ c⁻_λ`.
pub fn numeric_min_speed(p: &ModelParams) -> Minimum {
    let (lo, hi) = search_interval(p);
    golden_section(|l| -e_minus_unchecked(p, l) / l, lo, hi, SEARCH_TOL)
}

/// Numeric `sup_γ Δ(γ) − γλ` over `γ ∈ [0, gamma_max]`; recovers `E⁻(λ)`.
pub fn numeric_conjugate(p: &ModelParams, lambda: f64, gamma_max: f64) -> Minimum {
    golden_section_max(
        |g| {
            let (theta, a) = (p.theta(), p.a());
            p.rho() + theta / 4.0 - 0.25 * (gap_over_a(p) * (4.0 * g * g + theta * a)).sqrt() - g * lambda
        },
        0.0,
        gamma_max,
        SEARCH_TOL,
    )
}

/// `μ_λ` evaluated at the optimizing λ, handy for the ascent clock.
pub fn mu_at(p: &ModelParams, lambda: f64) -> f64 {
    mu_unchecked(p, lambda)
}
