//! Per-λ spectral quantities of the operator `Q_θ + ½λ²A + R`.

#[allow(unused_imports)] // shadowed by inherent methods when a dependent links std
use num_traits::Float;

use crate::{Error, ModelParams, Result};

/// `λ_min = −√((θ − 8r)/(4a))`, the point beyond which `μ_λ` stops being real.
pub fn lambda_min(p: &ModelParams) -> f64 {
    -((p.theta() - 8.0 * p.r()) / (4.0 * p.a())).sqrt()
}

/// Eigen-data for one value of the wave parameter λ ∈ (λ_min, 0].
///
/// The eigenfunctions are `v±(y) = exp(ψ± y²)` with eigenvalues `E± = ρ + θψ±`.
/// Wave speeds `c± = −E±/λ` are `None` at λ = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralQuantities {
    pub lambda: f64,
    pub mu: f64,
    pub psi_minus: f64,
    pub psi_plus: f64,
    pub e_minus: f64,
    pub e_plus: f64,
    pub c_minus: Option<f64>,
    pub c_plus: Option<f64>,
}

/// `μ_λ` without range checks; NaN outside the real range.
#[inline]
pub(crate) fn mu_unchecked(p: &ModelParams, lambda: f64) -> f64 {
    0.5 * (p.theta() * (p.theta() - 8.0 * p.r() - 4.0 * p.a() * lambda * lambda)).sqrt()
}

/// `E⁻(λ)` evaluated straight from the definitions, for the optimizers.
#[inline]
pub(crate) fn e_minus_unchecked(p: &ModelParams, lambda: f64) -> f64 {
    p.rho() + p.theta() * (0.25 - mu_unchecked(p, lambda) / (2.0 * p.theta()))
}

/// `ψ⁺(λ)` without range checks.
#[inline]
pub(crate) fn psi_plus_unchecked(p: &ModelParams, lambda: f64) -> f64 {
    0.25 + mu_unchecked(p, lambda) / (2.0 * p.theta())
}

impl SpectralQuantities {
    pub fn new(p: &ModelParams, lambda: f64) -> Result<Self> {
        let lmin = lambda_min(p);
        if !(lambda > lmin && lambda <= 0.0) {
            return Err(Error::LambdaOutOfRange { lambda, lambda_min: lmin });
        }
        let mu = mu_unchecked(p, lambda);
        let half_gap = mu / (2.0 * p.theta());
        let psi_minus = 0.25 - half_gap;
        let psi_plus = 0.25 + half_gap;
        let e_minus = p.rho() + p.theta() * psi_minus;
        let e_plus = p.rho() + p.theta() * psi_plus;
        let (c_minus, c_plus) = if lambda == 0.0 {
            (None, None)
        } else {
            (Some(-e_minus / lambda), Some(-e_plus / lambda))
        };
        Ok(Self { lambda, mu, psi_minus, psi_plus, e_minus, e_plus, c_minus, c_plus })
    }

    #[inline]
    pub fn psi(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Minus => self.psi_minus,
            Sign::Plus => self.psi_plus,
        }
    }

    #[inline]
    pub fn eigenvalue(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Minus => self.e_minus,
            Sign::Plus => self.e_plus,
        }
    }

    #[inline]
    pub fn speed(&self, sign: Sign) -> Option<f64> {
        match sign {
            Sign::Minus => self.c_minus,
            Sign::Plus => self.c_plus,
        }
    }

    /// `log v±(y) = ψ± y²`.
    #[inline]
    pub fn log_eigenfunction(&self, sign: Sign, y: f64) -> f64 {
        self.psi(sign) * y * y
    }

    /// `v±(y) = exp(ψ± y²)`; overflows to +∞ for large `|y|` on the plus branch.
    #[inline]
    pub fn eigenfunction(&self, sign: Sign, y: f64) -> f64 {
        self.log_eigenfunction(sign, y).exp()
    }
}

/// Which of the two eigen-branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn as_str(&self) -> &'static str {
        match self {
            Sign::Minus => "minus",
            Sign::Plus => "plus",
        }
    }
}

impl core::str::FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minus" | "-" => Ok(Sign::Minus),
            "plus" | "+" => Ok(Sign::Plus),
            _ => Err(Error::DomainError("sign must be 'plus' or 'minus'")),
        }
    }
}
