//! Scalar optimizers and root finders.

/// Golden ratio conjugate, (√5 − 1)/2.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of a bracketed scalar minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `tol` or stops shrinking in
/// floating point.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Minimum {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a) > tol && iterations < 500 {
        iterations += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if !(c > a && d < b && c < d) {
            break;
        }
    }
    let (x, value) = if fc < fd { (c, fc) } else { (d, fd) };
    Minimum { x, value, iterations }
}

/// Maximize `f` on `[lo, hi]` by minimizing `-f`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Minimum {
    let m = golden_section(|x| -f(x), lo, hi, tol);
    Minimum { value: -m.value, ..m }
}

/// Bisection for a root of `f` on `[lo, hi]` given `f(lo)` and `f(hi)` of
/// opposite signs. Returns `None` without a sign change.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return None;
    }
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol || m == a || m == b {
            return Some(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Scan `points` evenly spaced abscissae of `[lo, hi]` for the first sign
/// change of `f`; returns the sub-bracket.
pub fn scan_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    points: usize,
) -> Option<(f64, f64)> {
    let n = points.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    let mut prev_x = lo;
    let mut prev = f(lo);
    for i in 1..n {
        let x = if i == n - 1 { hi } else { lo + step * i as f64 };
        let v = f(x);
        if prev == 0.0 {
            return Some((prev_x, prev_x));
        }
        if v.is_finite() && prev.is_finite() && v.signum() != prev.signum() {
            return Some((prev_x, x));
        }
        prev_x = x;
        prev = v;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_min() {
        let m = golden_section(|x| (x - 0.3).powi(2) + 1.0, -2.0, 2.0, 1e-12);
        assert!((m.x - 0.3).abs() < 1e-7);
        assert!((m.value - 1.0).abs() < 1e-14);
        let m = golden_section_max(|x| -(x + 1.0).powi(2), -3.0, 0.0, 1e-12);
        assert!((m.x + 1.0).abs() < 1e-7);
    }

    #[test]
    fn bisect_and_scan() {
        let root = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((root - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
        let (a, b) = scan_bracket(|x| (x - 0.55).sin(), 0.0, 1.0, 256).unwrap();
        assert!(a <= 0.55 && 0.55 <= b);
        assert!(scan_bracket(|x| x + 5.0, 0.0, 1.0, 256).is_none());
    }
}
