//! One-dimensional quadrature.

/// A quadrature value with a Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// Composite Simpson rule on `[a, b]` with `panels` intervals (rounded up to even).
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = (panels.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(a + h * i as f64);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

/// Simpson with `panels` and `panels/2`, extrapolated; the error estimate is
/// the Richardson correction `|S_n − S_{n/2}|/15`.
pub fn simpson_richardson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> QuadResult {
    let n = panels.max(4).div_ceil(4) * 4;
    let fine = simpson(&mut f, a, b, n);
    let coarse = simpson(&mut f, a, b, n / 2);
    let corr = (fine - coarse) / 15.0;
    QuadResult { value: fine + corr, error: corr.abs() }
}

/// Adaptive Simpson to absolute tolerance `tol`, recursion capped at `depth`.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&mut f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 2);
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn richardson_and_adaptive() {
        let r = simpson_richardson(|x| x.exp(), 0.0, 1.0, 64);
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-12);
        assert!(r.error < 1e-8);
        let a = adaptive_simpson(|x| (-x * x).exp(), -8.0, 8.0, 1e-12, 40);
        assert!((a - core::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn convergence_order_four() {
        let e1 = (simpson(|x| x.sin(), 0.0, 3.0, 32) - (1.0 - 3f64.cos())).abs();
        let e2 = (simpson(|x| x.sin(), 0.0, 3.0, 64) - (1.0 - 3f64.cos())).abs();
        assert!(e1 / e2 > 14.0);
    }
}
