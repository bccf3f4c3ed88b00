//! Goodness-of-fit tests used by the verification suites.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom (χ²) or sample size (KS).
    pub dof: usize,
}

/// Kolmogorov limiting tail `P(K > x)`.
fn kolmogorov_tail(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against `cdf`, with the Stephens
/// small-sample correction of the asymptotic p-value.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> TestOutcome {
    let n = samples.len();
    let mut v: Vec<f64> = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let sn = nf.sqrt();
    TestOutcome { statistic: d, p_value: kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d), dof: n }
}

/// KS test against `N(mean, sd²)`.
pub fn ks_normal(samples: &[f64], mean: f64, sd: f64) -> TestOutcome {
    let law = Normal::new(mean, sd).expect("valid normal");
    ks_test(samples, |x| law.cdf(x))
}

/// Pearson χ² goodness of fit of integer counts against `pmf` on `{0, 1, …}`.
///
/// Adjacent cells are pooled left to right until each holds an expected
/// count of at least `min_expected`; the open tail is its own cell.
pub fn chi_square_counts<F: Fn(u64) -> f64>(values: &[u64], pmf: F, min_expected: f64) -> TestOutcome {
    let n = values.len() as f64;
    let top = values.iter().copied().max().unwrap_or(0);
    let mut observed = vec![0.0; top as usize + 1];
    for &v in values {
        observed[v as usize] += 1.0;
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    let mut used = 0.0;
    let mut k = 0u64;
    loop {
        let pk = pmf(k);
        o += observed.get(k as usize).copied().unwrap_or(0.0);
        e += n * pk;
        used += pk;
        k += 1;
        let tail = (1.0 - used).max(0.0) * n;
        if e >= min_expected && tail >= min_expected {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        } else if tail < min_expected {
            // everything from here on goes into one tail cell
            let rest: f64 = observed.iter().skip(k as usize).sum();
            cells.push((o + rest, e + tail));
            break;
        }
        if k > top + 10_000 {
            break;
        }
    }
    let stat: f64 = cells.iter().filter(|c| c.1 > 0.0).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1);
    let p = if dof == 0 { 1.0 } else { 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(stat) };
    TestOutcome { statistic: stat, p_value: p, dof }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_reference_points() {
        // P(K > 1.3581) ≈ 0.05 and P(K > 1.6276) ≈ 0.01
        assert!((kolmogorov_tail(1.3581) - 0.05).abs() < 2e-4);
        assert!((kolmogorov_tail(1.6276) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn ks_on_quantiles_is_perfect_fit() {
        let n = 1000;
        let law = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..n).map(|i| law.inverse_cdf((i as f64 + 0.5) / n as f64)).collect();
        let r = ks_normal(&xs, 0.0, 1.0);
        // inverse_cdf is accurate to about 1e-9
        assert!(r.statistic <= 0.5 / n as f64 + 1e-8, "{r:?}");
        assert!(r.p_value > 0.99);
        assert!(ks_normal(&xs, 0.5, 1.0).p_value < 1e-6);
    }

    #[test]
    fn chi_square_exact_counts() {
        // counts exactly proportional to a geometric law
        let mut v = Vec::new();
        for (k, c) in [(0u64, 500usize), (1, 250), (2, 125), (3, 63), (4, 31), (5, 16), (6, 8), (7, 7)] {
            v.extend(std::iter::repeat(k).take(c));
        }
        let r = chi_square_counts(&v, |k| 0.5f64.powi(k as i32 + 1), 5.0);
        assert!(r.p_value > 0.9, "{r:?}");
        let bad = chi_square_counts(&v, |k| if k == 0 { 0.9 } else { 0.1 * 0.5f64.powi(k as i32) }, 5.0);
        assert!(bad.p_value < 1e-6);
    }
}
