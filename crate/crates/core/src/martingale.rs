//! Additive martingales `Z±_λ(t) = Σ_u exp(ψ±Y_u² + λX_u − E±t)` on
//! snapshots, their decay rates and the ratio limit constant.
//!
//! Values are kept as logarithms throughout: `ψ⁺y²` for a rare high-type
//! particle easily exceeds the range of `f64`.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when a dependent links std
use num_traits::Float;

use crate::analytics::wave_speed;
use crate::quad::adaptive_simpson;
use crate::sim::{count_region, PopulationSnapshot};
use crate::spectral::Sign;
use crate::stats::{log_sum_exp, median, slope};
use crate::{Error, EstimatorResult, ModelParams, Result, SpectralQuantities};

/// `log` of one particle's term.
#[inline]
pub fn log_term(s: &SpectralQuantities, sign: Sign, x: f64, y: f64, t: f64) -> f64 {
    s.psi(sign) * y * y + s.lambda * x - s.eigenvalue(sign) * t
}

/// `log Z±_λ(t)` on a snapshot.
pub fn z_value(snap: &PopulationSnapshot, p: &ModelParams, lambda: f64, sign: Sign) -> Result<f64> {
    if snap.particles.is_empty() {
        return Err(Error::EmptySnapshot);
    }
    let s = SpectralQuantities::new(p, lambda)?;
    Ok(log_sum_exp(snap.particles.iter().map(|q| log_term(&s, sign, q.x, q.y, snap.time))))
}

/// `log Z` of a single particle at `(x, y)` at time `t`.
pub fn z_single(p: &ModelParams, lambda: f64, sign: Sign, x: f64, y: f64, t: f64) -> Result<f64> {
    Ok(log_term(&SpectralQuantities::new(p, lambda)?, sign, x, y, t))
}

/// `(time, log Z)` samples of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleSeries {
    pub lambda: f64,
    pub sign: Sign,
    pub samples: Vec<(f64, f64)>,
    /// Values are divided by `Z(0)`.
    pub normalized: bool,
}

impl MartingaleSeries {
    /// Series over the snapshots of a run, stopping at the first truncated one.
    /// With `normalize`, `log Z(0)` of the start point `(x0, y0)` is subtracted.
    pub fn from_snapshots(
        snaps: &[PopulationSnapshot],
        p: &ModelParams,
        lambda: f64,
        sign: Sign,
        normalize: Option<(f64, f64)>,
    ) -> Result<Self> {
        let s = SpectralQuantities::new(p, lambda)?;
        let shift = normalize.map_or(0.0, |(x0, y0)| log_term(&s, sign, x0, y0, 0.0));
        let mut samples = Vec::with_capacity(snaps.len());
        for snap in snaps.iter().take_while(|s| !s.truncated) {
            samples.push((snap.time, z_value(snap, p, lambda, sign)? - shift));
        }
        Ok(Self { lambda, sign, samples, normalized: normalize.is_some() })
    }
}

/// Least-squares slope of `log Z` against time over samples in `window`.
pub fn decay_slope(series: &MartingaleSeries, window: (f64, f64)) -> Result<f64> {
    let (t, v): (Vec<f64>, Vec<f64>) =
        series.samples.iter().filter(|(t, _)| *t >= window.0 && *t <= window.1).copied().unzip();
    if t.len() < 3 {
        return Err(Error::InsufficientData { need: 3, got: t.len() });
    }
    slope(&t, &v)
}

/// Limit constant `(μ/θ)^{1/4} ∫ f(y) e^{αy²} e^{ψ⁻y²} φ(y) dy` for α < 1/4
/// and λ ∈ (λ̃, 0].
pub fn f0_constant<F: Fn(f64) -> f64>(p: &ModelParams, f: F, alpha: f64, lambda: f64) -> Result<f64> {
    if !(alpha < 0.25) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let s = SpectralQuantities::new(p, lambda)?;
    if lambda < 0.0 && lambda <= wave_speed(p).lambda_tilde {
        return Err(Error::DomainError("lambda must exceed lambda_tilde"));
    }
    // Gaussian envelope exp(−c y²) with c = 1/2 − α − ψ⁻ > 0.
    let c = 0.5 - alpha - s.psi_minus;
    let half_width = (45.0 / c).sqrt();
    let norm = 1.0 / (2.0 * core::f64::consts::PI).sqrt();
    let integral = adaptive_simpson(|y| f(y) * (-c * y * y).exp() * norm, -half_width, half_width, 1e-13, 50);
    Ok((s.mu / p.theta()).powf(0.25) * integral)
}

/// `Σ f(Y)e^{αY² + λ(X + c⁻t)} / Z⁻_λ(t)` on one snapshot. With `localize =
/// Some((v, w))` only particles with `|X/t − v| < w` enter the numerator.
pub fn ratio_value<F: Fn(f64) -> f64>(
    snap: &PopulationSnapshot,
    p: &ModelParams,
    f: &F,
    alpha: f64,
    lambda: f64,
    localize: Option<(f64, f64)>,
) -> Result<f64> {
    let logz = z_value(snap, p, lambda, Sign::Minus)?;
    let s = SpectralQuantities::new(p, lambda)?;
    let t = snap.time;
    // λ·c⁻·t = −E⁻t
    let mut acc = 0.0;
    for q in &snap.particles {
        if let Some((v, w)) = localize {
            if !(t > 0.0 && (q.x / t - v).abs() < w) {
                continue;
            }
        }
        acc += f(q.y) * (alpha * q.y * q.y + lambda * q.x - s.e_minus * t - logz).exp();
    }
    Ok(acc)
}

/// Replica summary of the ratio at each run's latest non-truncated snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSummary {
    pub result: EstimatorResult,
    pub median: f64,
    pub used: usize,
}

pub fn ratio_limit_check<F: Fn(f64) -> f64>(
    runs: &[Vec<PopulationSnapshot>],
    p: &ModelParams,
    f: F,
    alpha: f64,
    lambda: f64,
    localize: Option<(f64, f64)>,
    seed: u64,
) -> Result<RatioSummary> {
    if !(alpha < 0.25) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let mut vals = Vec::with_capacity(runs.len());
    for run in runs {
        if let Some(snap) = run.iter().rev().find(|s| !s.truncated && !s.particles.is_empty()) {
            vals.push(ratio_value(snap, p, &f, alpha, lambda, localize)?);
        }
    }
    if vals.is_empty() {
        return Err(Error::InsufficientData { need: 1, got: 0 });
    }
    Ok(RatioSummary { result: EstimatorResult::from_samples(&vals, seed), median: median(&vals), used: vals.len() })
}

/// Outcome of a pathwise bound on one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub count: usize,
    pub log_bound: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.count == 0 || (self.count as f64).ln() <= self.log_bound + 1e-12 * (1.0 + self.log_bound.abs())
    }
}

/// `N_t(γ; C) ≤ e^{(E⁻ + λγ)t} Z⁻_λ(t)`.
pub fn space_bound(
    snap: &PopulationSnapshot,
    p: &ModelParams,
    lambda: f64,
    gamma: f64,
    window: Option<(f64, f64)>,
) -> Result<BoundCheck> {
    let s = SpectralQuantities::new(p, lambda)?;
    let count = count_region(snap, gamma, None, window)?;
    let logz = z_value(snap, p, lambda, Sign::Minus)?;
    Ok(BoundCheck { count, log_bound: (s.e_minus + lambda * gamma) * snap.time + logz })
}

/// `N_t(γ, κ) ≤ e^{(E⁺ − κ²ψ⁺ + λγ)t} Z⁺_λ(t)`.
pub fn space_type_bound(
    snap: &PopulationSnapshot,
    p: &ModelParams,
    lambda: f64,
    gamma: f64,
    kappa: f64,
) -> Result<BoundCheck> {
    let s = SpectralQuantities::new(p, lambda)?;
    let count = count_region(snap, gamma, Some(kappa), None)?;
    let logz = z_value(snap, p, lambda, Sign::Plus)?;
    Ok(BoundCheck {
        count,
        log_bound: (s.e_plus - kappa * kappa * s.psi_plus + lambda * gamma) * snap.time + logz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run, Particle, SimConfig};
    use crate::Label;
    use approx::assert_abs_diff_eq;

    fn snap(t: f64, pts: &[(f64, f64)]) -> PopulationSnapshot {
        let mut particles: Vec<Particle> = Vec::new();
        let mut l = Label::root();
        for &(x, y) in pts {
            l = l.child(1);
            particles.push(Particle { label: l.clone(), x, y, born_at: 0.0 });
        }
        PopulationSnapshot { time: t, particles, truncated: false }
    }

    #[test]
    fn single_particle_at_zero() {
        let p = ModelParams::p0();
        let s = SpectralQuantities::new(&p, -0.3).unwrap();
        let z = z_value(&snap(0.0, &[(1.5, 0.8)]), &p, -0.3, Sign::Plus).unwrap();
        assert_abs_diff_eq!(z, s.psi_plus * 0.64 - 0.45, epsilon = 1e-15);
        assert_eq!(z_value(&snap(0.0, &[]), &p, -0.3, Sign::Plus), Err(Error::EmptySnapshot));
    }

    #[test]
    fn additivity_and_termwise_ratio() {
        let p = ModelParams::p0();
        let a = [(0.1, 0.2), (-1.0, 2.5)];
        let b = [(3.0, -40.0), (0.0, 0.0)];
        let all: Vec<(f64, f64)> = a.iter().chain(b.iter()).copied().collect();
        for sign in [Sign::Minus, Sign::Plus] {
            let za = z_value(&snap(2.0, &a), &p, -0.4, sign).unwrap();
            let zb = z_value(&snap(2.0, &b), &p, -0.4, sign).unwrap();
            let zu = z_value(&snap(2.0, &all), &p, -0.4, sign).unwrap();
            assert_abs_diff_eq!(zu, log_sum_exp([za, zb]), epsilon = 1e-12);
            assert!(zu.is_finite());
        }
        let s = SpectralQuantities::new(&p, -0.4).unwrap();
        for &(x, y) in &all {
            let d = log_term(&s, Sign::Plus, x, y, 2.0) - log_term(&s, Sign::Minus, x, y, 2.0);
            let expect = (s.psi_plus - s.psi_minus) * y * y - (s.e_plus - s.e_minus) * 2.0;
            assert!((d - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn synthetic_slope() {
        let series = MartingaleSeries {
            lambda: -0.3,
            sign: Sign::Plus,
            samples: (0..7).map(|i| (i as f64, -2.0 * i as f64)).collect(),
            normalized: true,
        };
        assert_abs_diff_eq!(decay_slope(&series, (0.0, 6.0)).unwrap(), -2.0, epsilon = 1e-13);
        assert!(matches!(decay_slope(&series, (0.0, 1.0)), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn f0_reference_values() {
        let p = ModelParams::p0();
        assert_abs_diff_eq!(f0_constant(&p, |_| 1.0, 0.0, 0.0).unwrap(), 0.80838813668539676, epsilon = 1e-10);
        assert_eq!(f0_constant(&p, |_| 0.0, 0.0, 0.0).unwrap(), 0.0);
        let narrow = f0_constant(&p, |y| if y.abs() <= 1.0 { 1.0 } else { 0.0 }, 0.0, -0.3).unwrap();
        let wide = f0_constant(&p, |_| 1.0, 0.0, -0.3).unwrap();
        assert!(narrow < wide && narrow > 0.0);
        assert!(matches!(f0_constant(&p, |_| 1.0, 0.25, 0.0), Err(Error::AlphaOutOfRange(_))));
        assert!(f0_constant(&p, |_| 1.0, 0.0, -0.69).is_err());
    }

    #[test]
    fn ratio_self_check() {
        // With α = ψ⁻ and f ≡ 1 the numerator is Z⁻ itself.
        let p = ModelParams::p0();
        let s = SpectralQuantities::new(&p, -0.3).unwrap();
        let sn = snap(1.3, &[(0.2, 0.4), (-2.0, 1.9), (1.0, -0.7)]);
        let r = ratio_value(&sn, &p, &|_| 1.0, s.psi_minus, -0.3, None).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn pathwise_bounds_on_simulated_snapshots() {
        let p = ModelParams::p0();
        let cfg = SimConfig::new(0.05, 0.01, 100_000, 1.0, 4).unwrap().with_snapshots(vec![0.25, 0.5, 1.0]).unwrap();
        for r in 0..20 {
            for sn in run(&p, (0.0, 0.5), &cfg.for_replica(r)).unwrap() {
                for lambda in [-0.05, -0.3, -0.6, -0.7] {
                    for gamma in [0.0, 0.5, 1.0, 3.0] {
                        assert!(space_bound(&sn, &p, lambda, gamma, None).unwrap().holds());
                        assert!(space_bound(&sn, &p, lambda, gamma, Some((-1.0, 1.0))).unwrap().holds());
                        for kappa in [0.0, 0.5, 1.0] {
                            assert!(space_type_bound(&sn, &p, lambda, gamma, kappa).unwrap().holds());
                        }
                    }
                }
            }
        }
    }
}
