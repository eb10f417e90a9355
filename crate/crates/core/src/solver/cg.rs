//! Matrix-free conjugate gradient for the SPD flux systems.

pub struct CgResult {
    pub iterations: usize,
    pub converged: bool,
    pub rel_residual: f64,
}

/// Solves `A x = b` for SPD `apply`, starting from the current `x`.
/// Stops when `||b - A x||_2 <= rtol * ||b||_2`.
pub fn conjugate_gradient(
    apply: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iter: usize,
) -> CgResult {
    let n = b.len();
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];

    let norm_b = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut rr = dot(&r, &r);
    let target = rtol * norm_b;

    let mut iterations = 0;
    while rr.sqrt() > target && iterations < max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            break; // loss of positive definiteness; bail with current iterate
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        iterations += 1;
    }
    CgResult {
        iterations,
        converged: rr.sqrt() <= target,
        rel_residual: rr.sqrt() / norm_b,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_spd_system() {
        // A = [[4,1],[1,3]], b = [1,2]
        let apply = |x: &[f64], out: &mut [f64]| {
            out[0] = 4.0 * x[0] + x[1];
            out[1] = x[0] + 3.0 * x[1];
        };
        let b = [1.0, 2.0];
        let mut x = [0.0, 0.0];
        let res = conjugate_gradient(&apply, &b, &mut x, 1e-12, 100);
        assert!(res.converged);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-10);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-10);
    }
}
