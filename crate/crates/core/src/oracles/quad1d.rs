//! Adaptive 1-D quadrature used by the radial oracles.

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 40)
}

/// Integrates `f` over `[r0, r1]` where `f` may have an integrable power
/// singularity at 0: the interval is split geometrically toward the left end
/// so adaptive Simpson only ever sees smooth pieces.
pub fn integrate_radial(f: &dyn Fn(f64) -> f64, r0: f64, r1: f64, tol: f64) -> f64 {
    assert!(r0 >= 0.0 && r1 > r0);
    let floor = 1e-12 * r1;
    let lo = r0.max(floor);
    let mut total = 0.0;
    let mut hi = r1;
    while hi > lo * 2.0 {
        let mid = (lo * 2.0).max(hi / 2.0);
        total += adaptive_simpson(f, mid, hi, tol * (hi - mid) / (r1 - lo));
        hi = mid;
    }
    total += adaptive_simpson(f, lo, hi, tol);
    total
}
