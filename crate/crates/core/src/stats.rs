//! Small statistics toolkit shared by the estimators.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when a dependent links std
use num_traits::Float;

use crate::{Error, Result};

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorResult {
    pub estimate: f64,
    pub std_error: f64,
    pub replicas: usize,
    pub seed: u64,
}

impl EstimatorResult {
    /// Sample mean and standard error of `samples`.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let (m, v) = mean_var(samples);
        let n = samples.len();
        let se = if n > 1 { (v / n as f64).sqrt() } else { f64::NAN };
        Self { estimate: m, std_error: se, replicas: n, seed }
    }

    /// `[estimate − k·se, estimate + k·se]`.
    pub fn interval(&self, k: f64) -> (f64, f64) {
        (self.estimate - k * self.std_error, self.estimate + k * self.std_error)
    }

    /// Whether `value` lies within `k` standard errors.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.std_error
    }

    /// Whether the two `k`-sigma intervals intersect.
    pub fn overlaps(&self, other: &EstimatorResult, k: f64) -> bool {
        let (a0, a1) = self.interval(k);
        let (b0, b1) = other.interval(k);
        a0 <= b1 && b0 <= a1
    }
}

/// Mean and unbiased variance (Welford).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    let var = if xs.len() > 1 { m2 / (xs.len() - 1) as f64 } else { 0.0 };
    (if xs.is_empty() { f64::NAN } else { mean }, var)
}

pub fn mean(xs: &[f64]) -> f64 {
    mean_var(xs).0
}

/// Median (average of the middle pair for even lengths); NaN when empty.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return Err(Error::InsufficientData { need: 2, got: n });
    }
    let mx = mean(&x[..n]);
    let my = mean(&y[..n]);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for i in 0..n {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if sxx == 0.0 {
        return Err(Error::DomainError("slope needs distinct abscissae"));
    }
    Ok(sxy / sxx)
}

/// `log Σ exp(v)`; `-inf` for an empty input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_moments() {
        let (m, v) = mean_var(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15 && (v - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let r = EstimatorResult::from_samples(&[1.0; 10], 3);
        assert_eq!((r.estimate, r.std_error, r.replicas), (1.0, 0.0, 10));
    }

    #[test]
    fn regression_identity() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|t| -1.75 * t + 0.3).collect();
        assert!((slope(&x, &y).unwrap() + 1.75).abs() < 1e-13);
        assert!(slope(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn lse_is_stable() {
        let v = log_sum_exp([1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(core::iter::empty()), f64::NEG_INFINITY);
        assert!((log_add_exp(-800.0, -800.0) - (-800.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_add_exp(f64::NEG_INFINITY, 2.0) - 2.0).abs() < 1e-15);
    }
}
