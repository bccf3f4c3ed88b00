//! Optimal ascent paths, the finite-horizon optimizer λ̂ and the path cost
//! functional.
//!
//! An ascent takes a lineage from `(0, 0)` to `(−βt, κ√t)` in space and type
//! over a window of length τ. The type follows a `sinh` profile, the spatial
//! path is `λa∫y²`, and the cost is the functional
//! `J(s) = ∫₀ˢ (ẏ + θy/2)²/(2θ) + ẋ²/(2ay²) − ry² − ρ`.

#[allow(unused_imports)] // shadowed by inherent methods when a dependent links std
use num_traits::Float;

use crate::analytics::{theta_cost, SEARCH_EPS};
use crate::optimize::{bisect, golden_section_max, scan_bracket};
use crate::quad::{simpson, simpson_richardson};
use crate::spectral::{lambda_min, mu_unchecked};
use crate::{Error, ModelParams, Result};

/// Default Simpson panel count for path functionals.
pub const DEFAULT_PANELS: usize = 1 << 14;
/// Grid size for the supremum search.
pub const SUP_GRID: usize = 1024;
const SCAN_POINTS: usize = 256;
const ROOT_TOL: f64 = 1e-12;

/// Ascent clock: the τ at which the optimal type profile started at scale
/// `√(θ/2μ)` reaches `κ√t`, or 0 when `2μt ≤ θ`.
pub fn tau_of_t(p: &ModelParams, lambda_bar: f64, t: f64) -> Result<f64> {
    let lmin = lambda_min(p);
    if !(lambda_bar > lmin && lambda_bar < 0.0) {
        return Err(Error::LambdaOutOfRange { lambda: lambda_bar, lambda_min: lmin });
    }
    let mu = mu_unchecked(p, lambda_bar);
    let z = 2.0 * mu * t / p.theta();
    Ok(if z > 1.0 { z.ln() / (2.0 * mu) } else { 0.0 })
}

/// Target of an ascent: space speed β, scaled type height κ, horizon t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentSpec {
    pub beta: f64,
    pub kappa: f64,
    pub t: f64,
}

impl AscentSpec {
    pub fn new(beta: f64, kappa: f64, t: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::DomainError("beta must be non-negative"));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::DomainError("kappa must be positive"));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::DomainError("t must be positive"));
        }
        Ok(Self { beta, kappa, t })
    }

    /// Final type height `κ√t`.
    pub fn y_end(&self) -> f64 {
        self.kappa * self.t.sqrt()
    }

    /// Final spatial position `−βt`.
    pub fn x_end(&self) -> f64 {
        -self.beta * self.t
    }
}

/// A value and its derivative at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub value: f64,
    pub deriv: f64,
}

/// Anything that can report a path value and slope at time `s`.
pub trait PathSampler {
    fn sample(&self, s: f64) -> PathPoint;
}

/// A user path given only by its values; slopes come from central
/// differences with step `rel_step · scale`.
#[derive(Debug, Clone, Copy)]
pub struct FnPath<F> {
    f: F,
    step: f64,
}

impl<F: Fn(f64) -> f64> FnPath<F> {
    /// `scale` is usually the horizon τ; the step is `1e-6·scale`.
    pub fn new(f: F, scale: f64) -> Self {
        Self { f, step: 1e-6 * scale.abs().max(f64::MIN_POSITIVE) }
    }
}

impl<F: Fn(f64) -> f64> PathSampler for FnPath<F> {
    fn sample(&self, s: f64) -> PathPoint {
        let h = self.step;
        PathPoint { value: (self.f)(s), deriv: ((self.f)(s + h) - (self.f)(s - h)) / (2.0 * h) }
    }
}

impl<T: PathSampler + ?Sized> PathSampler for &T {
    fn sample(&self, s: f64) -> PathPoint {
        (**self).sample(s)
    }
}

/// The `sinh`-family optimal pair for one `(λ, τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalAscent {
    pub spec: AscentSpec,
    pub lambda: f64,
    pub mu: f64,
    pub tau: f64,
    theta: f64,
    rho: f64,
}

pub fn optimal_paths(p: &ModelParams, spec: AscentSpec, lambda: f64, tau: f64) -> Result<OptimalAscent> {
    let lmin = lambda_min(p);
    if !(lambda > lmin && lambda < 0.0) {
        return Err(Error::LambdaOutOfRange { lambda, lambda_min: lmin });
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::DegenerateTau(tau));
    }
    Ok(OptimalAscent {
        spec,
        lambda,
        mu: mu_unchecked(p, lambda),
        tau,
        theta: p.theta(),
        rho: p.rho(),
    })
}

/// Optimal ascent at λ̄ = the infinite-window optimizer of the ascent cost,
/// with τ from the clock. Fails with `DegenerateTau` when the clock gives 0.
pub fn ascent_for_spec(p: &ModelParams, spec: AscentSpec) -> Result<OptimalAscent> {
    let lambda = theta_cost(p, spec.beta, spec.kappa)?.lambda_bar;
    if lambda == 0.0 {
        return Err(Error::DomainError("beta must be positive for a spatial ascent"));
    }
    let tau = tau_of_t(p, lambda, spec.t)?;
    optimal_paths(p, spec, lambda, tau)
}

impl OptimalAscent {
    /// Type path `κ√t·sinh(μs)/sinh(μτ)` and its slope.
    pub fn y(&self, s: f64) -> PathPoint {
        let k = self.spec.y_end() / (self.mu * self.tau).sinh();
        PathPoint { value: k * (self.mu * s).sinh(), deriv: k * self.mu * (self.mu * s).cosh() }
    }

    /// Spatial path `−βt·(sinh 2μs − 2μs)/(sinh 2μτ − 2μτ)` and its slope.
    pub fn x(&self, s: f64) -> PathPoint {
        let m2 = 2.0 * self.mu;
        let d = (m2 * self.tau).sinh() - m2 * self.tau;
        let k = self.spec.x_end() / d;
        let sh = (self.mu * s).sinh();
        PathPoint { value: k * ((m2 * s).sinh() - m2 * s), deriv: k * 2.0 * m2 * sh * sh }
    }

    pub fn y_path(&self) -> TypePath<'_> {
        TypePath(self)
    }

    pub fn x_path(&self) -> SpacePath<'_> {
        SpacePath(self)
    }

    /// `λa∫₀ˢ y²` by Simpson; equals `x(s)` exactly when λ is the finite-window optimizer.
    pub fn spatial_from_type(&self, p: &ModelParams, s: f64, panels: usize) -> f64 {
        self.lambda * p.a() * simpson(|w| self.y(w).value.powi(2), 0.0, s, panels)
    }

    /// Closed-form cost `t·(κ²(1/4 + μ coth(μτ)/(2θ)) − λβ) − ρτ`; matches
    /// `J(τ)` along the pair when λ is the finite-window optimizer.
    pub fn closed_form_cost(&self) -> f64 {
        let per_t = finite_window_cost(self.theta, self.mu, self.lambda, self.spec.beta, self.spec.kappa, self.tau);
        self.spec.t * per_t - self.rho * self.tau
    }
}

/// Type path sampler borrowed from an [`OptimalAscent`].
#[derive(Debug, Clone, Copy)]
pub struct TypePath<'a>(&'a OptimalAscent);
/// Spatial path sampler borrowed from an [`OptimalAscent`].
#[derive(Debug, Clone, Copy)]
pub struct SpacePath<'a>(&'a OptimalAscent);

impl PathSampler for TypePath<'_> {
    fn sample(&self, s: f64) -> PathPoint {
        self.0.y(s)
    }
}

impl PathSampler for SpacePath<'_> {
    fn sample(&self, s: f64) -> PathPoint {
        self.0.x(s)
    }
}

fn finite_window_cost(theta: f64, mu: f64, lambda: f64, beta: f64, kappa: f64, tau: f64) -> f64 {
    let coth = 1.0 / (mu * tau).tanh();
    kappa * kappa * (0.25 + mu * coth / (2.0 * theta)) - lambda * beta
}

/// `coth(x)/(2x) − 1/(2 sinh² x)`, with its series near 0.
fn window_kernel(x: f64) -> f64 {
    if x < 1e-3 {
        1.0 / 3.0 - 2.0 * x * x / 45.0
    } else {
        let sh = x.sinh();
        1.0 / (2.0 * x * x.tanh()) - 1.0 / (2.0 * sh * sh)
    }
}

/// Optimality condition of the finite window, divided by t:
/// `−β/(aλ) − κ²τ·k(μτ)` with `k` the window kernel.
pub fn lambda_hat_condition(p: &ModelParams, beta: f64, kappa: f64, tau: f64, lambda: f64) -> f64 {
    let mu = mu_unchecked(p, lambda);
    -beta / (p.a() * lambda) - kappa * kappa * tau * window_kernel(mu * tau)
}

/// Finite-window optimizer λ̂(τ): the root of [`lambda_hat_condition`] on
/// `(λ_min, 0)`, bracketed by a 256-point scan and refined by bisection.
pub fn lambda_hat(p: &ModelParams, spec: AscentSpec, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::DegenerateTau(tau));
    }
    if spec.beta <= 0.0 {
        return Err(Error::DomainError("lambda_hat needs beta > 0"));
    }
    let (lo, hi) = (lambda_min(p) + SEARCH_EPS, -SEARCH_EPS);
    let f = |l: f64| lambda_hat_condition(p, spec.beta, spec.kappa, tau, l);
    let (a, b) = scan_bracket(f, lo, hi, SCAN_POINTS).ok_or(Error::NoBracket { lo, hi })?;
    bisect(f, a, b, ROOT_TOL).ok_or(Error::NoBracket { lo: a, hi: b })
}

/// Per-unit-t ascent cost over a window τ at the finite-window optimizer.
/// For β = 0 the optimizer sits at λ = 0.
pub fn ascent_cost_limit(p: &ModelParams, beta: f64, kappa: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::DegenerateTau(tau));
    }
    if beta == 0.0 {
        let mu0 = mu_unchecked(p, 0.0);
        return Ok(finite_window_cost(p.theta(), mu0, 0.0, 0.0, kappa, tau));
    }
    let spec = AscentSpec::new(beta, kappa, 1.0)?;
    let lh = lambda_hat(p, spec, tau)?;
    Ok(finite_window_cost(p.theta(), mu_unchecked(p, lh), lh, beta, kappa, tau))
}

/// Evaluation mode of [`functional_j`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalMode {
    /// `J` at the end time only.
    AtS,
    /// Also the supremum of `J` over `[0, s]`.
    SupOver,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathFunctionalValue {
    pub j_value: f64,
    /// `sup_{w ≤ s} J(w)`, present in [`FunctionalMode::SupOver`].
    pub l_value: Option<f64>,
    /// Where the supremum is attained.
    pub argmax: Option<f64>,
    pub error_estimate: f64,
}

/// The J integrand at one time. A vanishing type with a moving spatial path
/// is singular; with a still spatial path the spatial term is taken as 0.
pub fn integrand<X: PathSampler, Y: PathSampler>(p: &ModelParams, x: &X, y: &Y, s: f64) -> Result<f64> {
    let yp = y.sample(s);
    let xp = x.sample(s);
    let y2 = yp.value * yp.value;
    let drift = yp.deriv + p.theta() * yp.value / 2.0;
    let mut v = drift * drift / (2.0 * p.theta()) - p.r() * y2 - p.rho();
    if y2 > 0.0 {
        v += xp.deriv * xp.deriv / (2.0 * p.a() * y2);
    } else if xp.deriv != 0.0 {
        return Err(Error::SingularPath(s));
    }
    Ok(v)
}

/// Integrand with the removable limit at the start point: ascents leave
/// `y = 0` with `ẋ = o(y)` (the optimal pair has `y ~ s`, `ẋ ~ s²`), so the
/// spatial term is dropped at s = 0.
fn integrand_limit<X: PathSampler, Y: PathSampler>(p: &ModelParams, x: &X, y: &Y, s: f64) -> Result<f64> {
    if s == 0.0 {
        let yp = y.sample(0.0);
        if yp.value == 0.0 {
            let drift = yp.deriv;
            return Ok(drift * drift / (2.0 * p.theta()) - p.rho());
        }
    }
    integrand(p, x, y, s)
}

/// Plain composite Simpson of J over `[0, s]` with `panels` intervals.
pub fn functional_j_panels<X: PathSampler, Y: PathSampler>(
    p: &ModelParams,
    x: &X,
    y: &Y,
    s: f64,
    panels: usize,
) -> Result<f64> {
    let vals = integrand_grid(p, x, y, 0.0, s, panels)?;
    let h = s / (vals.len() - 1) as f64;
    Ok(simpson_from_values(&vals, h))
}

fn integrand_grid<X: PathSampler, Y: PathSampler>(
    p: &ModelParams,
    x: &X,
    y: &Y,
    a: f64,
    b: f64,
    panels: usize,
) -> Result<alloc::vec::Vec<f64>> {
    let n = (panels.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    (0..=n).map(|i| integrand_limit(p, x, y, a + h * i as f64)).collect()
}

fn simpson_from_values(v: &[f64], h: f64) -> f64 {
    let n = v.len() - 1;
    let mut acc = v[0] + v[n];
    for (i, f) in v.iter().enumerate().take(n).skip(1) {
        acc += if i % 2 == 1 { 4.0 * f } else { 2.0 * f };
    }
    acc * h / 3.0
}

/// Path functional J along `(x, y)` up to time `s`, and optionally its
/// running supremum. Uses composite Simpson with [`DEFAULT_PANELS`] and a
/// Richardson error estimate.
pub fn functional_j<X: PathSampler, Y: PathSampler>(
    p: &ModelParams,
    x: &X,
    y: &Y,
    s: f64,
    mode: FunctionalMode,
) -> Result<PathFunctionalValue> {
    functional_j_with(p, x, y, s, mode, DEFAULT_PANELS)
}

pub fn functional_j_with<X: PathSampler, Y: PathSampler>(
    p: &ModelParams,
    x: &X,
    y: &Y,
    s: f64,
    mode: FunctionalMode,
    panels: usize,
) -> Result<PathFunctionalValue> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::DomainError("s must be non-negative"));
    }
    if s == 0.0 {
        let l = (mode == FunctionalMode::SupOver).then_some(0.0);
        return Ok(PathFunctionalValue { j_value: 0.0, l_value: l, argmax: l, error_estimate: 0.0 });
    }
    // Panels are a multiple of 2·SUP_GRID so grid points land on Simpson pairs.
    let n = panels.max(2 * SUP_GRID).div_ceil(2 * SUP_GRID) * 2 * SUP_GRID;
    let vals = integrand_grid(p, x, y, 0.0, s, n)?;
    let h = s / n as f64;
    let fine = simpson_from_values(&vals, h);
    let coarse: alloc::vec::Vec<f64> = vals.iter().step_by(2).copied().collect();
    let coarse = simpson_from_values(&coarse, 2.0 * h);
    let corr = (fine - coarse) / 15.0;
    let j_value = fine;

    let (l_value, argmax) = if mode == FunctionalMode::SupOver {
        // cumulative J on the 1024-cell grid
        let per = n / SUP_GRID;
        let mut cum = alloc::vec::Vec::with_capacity(SUP_GRID + 1);
        cum.push(0.0);
        for k in 0..SUP_GRID {
            let seg = &vals[k * per..=(k + 1) * per];
            cum.push(cum[k] + simpson_from_values(seg, h));
        }
        let (kbest, &jbest) = cum
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(core::cmp::Ordering::Equal))
            .expect("grid is nonempty");
        let ds = s / SUP_GRID as f64;
        let lo_k = kbest.saturating_sub(1);
        let hi_k = (kbest + 1).min(SUP_GRID);
        let (lo, hi) = (ds * lo_k as f64, ds * hi_k as f64);
        let base = cum[lo_k];
        let local = |w: f64| {
            if w <= lo {
                return base;
            }
            base + simpson_richardson(|u| integrand_limit(p, x, y, u).unwrap_or(f64::NAN), lo, w, 64).value
        };
        let m = golden_section_max(local, lo, hi, 1e-10 * s);
        if m.value.is_finite() && m.value > jbest {
            (Some(m.value), Some(m.x))
        } else {
            (Some(jbest), Some(ds * kbest as f64))
        }
    } else {
        (None, None)
    };
    Ok(PathFunctionalValue { j_value, l_value, argmax, error_estimate: corr.abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p0() -> ModelParams {
        ModelParams::p0()
    }

    #[test]
    fn clock_reference_values() {
        let lbar = -(20f64 / 161.0).sqrt();
        let tau = tau_of_t(&p0(), lbar, 100.0).unwrap();
        assert_abs_diff_eq!(tau, 0.94342357854955261, epsilon = 1e-12);
        let mu = mu_unchecked(&p0(), lbar);
        assert_abs_diff_eq!(mu, 1.9384952863381638, epsilon = 1e-13);
        assert_abs_diff_eq!((10.0 / (2.0 * mu)).sqrt() * (mu * tau).exp(), 10.0, epsilon = 1e-11);
        assert_eq!(tau_of_t(&p0(), lbar, 1.0).unwrap(), 0.0);
        let scaled = tau_of_t(&p0(), lbar, 100.0 * (2.0 * mu).exp()).unwrap();
        assert_abs_diff_eq!(scaled - tau, 1.0, epsilon = 1e-12);
        assert!(tau_of_t(&p0(), -0.8, 10.0).is_err());
    }

    #[test]
    fn endpoints_pinned() {
        let spec = AscentSpec::new(1.0, 1.0, 100.0).unwrap();
        let asc = optimal_paths(&p0(), spec, -0.6984302957695782, 1.0).unwrap();
        assert_eq!(asc.y(0.0).value, 0.0);
        assert_eq!(asc.x(0.0).value, 0.0);
        assert_abs_diff_eq!(asc.y(1.0).value, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(asc.x(1.0).value, -100.0, epsilon = 1e-12);
        assert!(matches!(optimal_paths(&p0(), spec, -0.5, 0.0), Err(Error::DegenerateTau(_))));
    }

    #[test]
    fn analytic_slopes_match_differences() {
        let spec = AscentSpec::new(0.7, 1.3, 40.0).unwrap();
        let asc = optimal_paths(&p0(), spec, -0.5, 2.0).unwrap();
        for &s in &[0.1, 0.7, 1.3, 1.95] {
            let fy = FnPath::new(|w| asc.y(w).value, 2.0).sample(s);
            let fx = FnPath::new(|w| asc.x(w).value, 2.0).sample(s);
            assert!((fy.deriv - asc.y(s).deriv).abs() < 1e-6 * (1.0 + fy.deriv.abs()));
            assert!((fx.deriv - asc.x(s).deriv).abs() < 1e-6 * (1.0 + fx.deriv.abs()));
        }
    }

    #[test]
    fn lambda_hat_reference_values() {
        let spec = AscentSpec::new(1.0, 1.0, 100.0).unwrap();
        let table = [
            (4.25, -0.70705787826),
            (4.5, -0.70557005692),
            (5.0, -0.70338839836),
            (6.0, -0.70092241879),
            (8.0, -0.69912153976),
            (12.0, -0.69848928422),
        ];
        for (tau, expect) in table {
            assert_abs_diff_eq!(lambda_hat(&p0(), spec, tau).unwrap(), expect, epsilon = 2e-10);
        }
        // short windows have no root in range
        for tau in [1.0, 2.0, 4.0] {
            assert!(matches!(lambda_hat(&p0(), spec, tau), Err(Error::NoBracket { .. })));
        }
        let zero_beta = AscentSpec::new(0.0, 1.0, 100.0).unwrap();
        assert!(lambda_hat(&p0(), zero_beta, 6.0).is_err());
    }

    #[test]
    fn cost_reference_values() {
        for (tau, expect) in [(5.0, 0.96741916808), (6.0, 0.96655764078), (8.0, 0.96603446512), (12.0, 0.96589915700)] {
            assert_abs_diff_eq!(ascent_cost_limit(&p0(), 1.0, 1.0, tau).unwrap(), expect, epsilon = 1e-10);
        }
        let th = theta_cost(&p0(), 1.0, 1.0).unwrap().value;
        let mut prev = f64::INFINITY;
        for tau in [4.5, 5.0, 6.0, 8.0, 10.0, 12.0, 16.0, 24.0] {
            let c = ascent_cost_limit(&p0(), 1.0, 1.0, tau).unwrap();
            assert!(c <= prev && c >= th - 1e-12);
            prev = c;
        }
        assert!((prev - th).abs() < 1e-8);
        let b0 = ascent_cost_limit(&p0(), 0.0, 1.0, 3.0).unwrap();
        let mu0 = 5f64.sqrt();
        assert_abs_diff_eq!(b0, 0.25 + mu0 / (20.0 * (3.0 * mu0).tanh()), epsilon = 1e-14);
    }

    #[test]
    fn constant_path_functional() {
        let y0 = 1.7;
        let y = FnPath::new(|_| y0, 1.0);
        let x = FnPath::new(|_| 0.0, 1.0);
        let v = functional_j(&p0(), &x, &y, 2.5, FunctionalMode::AtS).unwrap();
        let expect = 2.5 * (y0 * y0 * 10.0 / 8.0 - y0 * y0 - 1.0);
        assert_abs_diff_eq!(v.j_value, expect, epsilon = 1e-10);
    }

    #[test]
    fn singular_path_detected() {
        let y = FnPath::new(|s: f64| (s - 0.5).abs(), 1.0);
        let x = FnPath::new(|s: f64| s, 1.0);
        assert!(matches!(
            functional_j(&p0(), &x, &y, 1.0, FunctionalMode::AtS),
            Err(Error::SingularPath(_))
        ));
    }

    #[test]
    fn optimal_pair_matches_closed_form() {
        let spec = AscentSpec::new(1.0, 1.0, 100.0).unwrap();
        for (tau, expect) in [(6.0, 90.655764078), (8.0, 88.603446512), (12.0, 84.589915700)] {
            let lh = lambda_hat(&p0(), spec, tau).unwrap();
            let asc = optimal_paths(&p0(), spec, lh, tau).unwrap();
            assert_abs_diff_eq!(asc.closed_form_cost(), expect, epsilon = 1e-7);
            let v = functional_j(&p0(), &asc.x_path(), &asc.y_path(), tau, FunctionalMode::SupOver).unwrap();
            assert!((v.j_value - expect).abs() / expect < 1e-8, "tau {tau}: {}", v.j_value);
            let l = v.l_value.unwrap();
            assert!(l >= v.j_value - 1e-9 && (l - v.j_value).abs() < 1e-6);
            // x = λa∫y² when λ is the finite-window optimizer
            assert!((asc.spatial_from_type(&p0(), tau, 4096) + 100.0).abs() < 1e-6);
        }
    }

    #[test]
    fn j_along_optimal_pair_peaks_at_the_end() {
        // J dips below zero first (the integrand starts at ẏ(0)²/2θ − ρ < 0),
        // then increases, so its supremum over [0, τ] is J(τ).
        let spec = AscentSpec::new(1.0, 1.0, 100.0).unwrap();
        let lh = lambda_hat(&p0(), spec, 6.0).unwrap();
        let asc = optimal_paths(&p0(), spec, lh, 6.0).unwrap();
        assert!(integrand_limit(&p0(), &asc.x_path(), &asc.y_path(), 0.0).unwrap() < 0.0);
        let js: alloc::vec::Vec<f64> = (0..=1000)
            .map(|k| functional_j_panels(&p0(), &asc.x_path(), &asc.y_path(), 6.0 * k as f64 / 1000.0, 256).unwrap())
            .collect();
        let imin = (0..js.len()).min_by(|&i, &j| js[i].total_cmp(&js[j])).unwrap();
        assert!(js[imin] < 0.0 && imin > 0);
        for w in js[imin..].windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        let top = js.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(top, js[1000]);
    }

    #[test]
    fn quadrature_converges_at_fourth_order() {
        let spec = AscentSpec::new(1.0, 1.0, 100.0).unwrap();
        let lh = lambda_hat(&p0(), spec, 6.0).unwrap();
        let asc = optimal_paths(&p0(), spec, lh, 6.0).unwrap();
        let exact = asc.closed_form_cost();
        let err = |n| (functional_j_panels(&p0(), &asc.x_path(), &asc.y_path(), 6.0, n).unwrap() - exact).abs();
        let (e1, e2) = (err(64), err(128));
        assert!(e1 / e2 >= 8.0, "{e1} {e2}");
    }

    #[test]
    fn perturbations_do_not_beat_the_optimum() {
        let spec = AscentSpec::new(1.0, 1.0, 100.0).unwrap();
        let tau = 6.0;
        let lh = lambda_hat(&p0(), spec, tau).unwrap();
        let asc = optimal_paths(&p0(), spec, lh, tau).unwrap();
        let best = asc.closed_form_cost();
        for (k, amp) in [(1.0, 0.05), (2.0, -0.03), (3.0, 0.02)] {
            // bump vanishing at both ends keeps endpoints and positivity
            let bump = move |s: f64| amp * (core::f64::consts::PI * k * s / tau).sin();
            let y = FnPath::new(move |s| asc.y(s).value * (1.0 + bump(s)), tau);
            let x = FnPath::new(move |s| asc.x(s).value * (1.0 + 0.5 * bump(s)), tau);
            let v = functional_j_with(&p0(), &x, &y, tau, FunctionalMode::AtS, 1 << 13).unwrap();
            assert!(v.j_value >= best - 1e-6, "{} < {best}", v.j_value);
        }
    }
}
