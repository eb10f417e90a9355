//! Radial exact solution family `u = scale * |x|^{p/(p-1)}` with constant
//! one-signed source, plus the 1-D reduction of every functional on it.

use super::quad1d::integrate_radial;
use super::OracleError;
use crate::fields::{GridDomain, ScalarField};
use crate::functionals::truncation::cutoff_h;

/// `u(x) = scale * |x|^m`, `m = p/(p-1)`, solving
/// `-div(|grad u|^{p-2} grad u) = f` with the constant
/// `f = -sign(scale) * n * (|scale| * m)^{p-1}`.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub p: f64,
    pub n: usize,
    /// Derived exponent p/(p-1).
    pub m: f64,
    pub scale: f64,
    /// The constant source value.
    pub f_value: f64,
    pub sign: f64,
}

impl RadialSolution {
    pub fn new(p: f64, n: usize, scale: f64) -> Self {
        assert!(p > 1.0, "radial family needs p > 1");
        assert!((1..=3).contains(&n));
        let m = p / (p - 1.0);
        let sign = if scale >= 0.0 { 1.0 } else { -1.0 };
        let f_value = -sign * n as f64 * (scale.abs() * m).powf(p - 1.0);
        RadialSolution { p, n, m, scale, f_value, sign }
    }

    fn r(&self, x: &[f64; 3]) -> f64 {
        (0..self.n).map(|a| x[a] * x[a]).sum::<f64>().sqrt()
    }

    pub fn u(&self, x: &[f64; 3]) -> f64 {
        self.scale * self.r(x).powf(self.m)
    }

    /// Analytic gradient; zero at the origin (m > 1 always).
    pub fn grad(&self, x: &[f64; 3]) -> [f64; 3] {
        let r = self.r(x);
        let mut g = [0.0; 3];
        if r == 0.0 {
            return g;
        }
        let c = self.scale * self.m * r.powf(self.m - 2.0);
        for a in 0..self.n {
            g[a] = c * x[a];
        }
        g
    }

    pub fn grad_norm(&self, x: &[f64; 3]) -> f64 {
        self.scale.abs() * self.m * self.r(x).powf(self.m - 1.0)
    }

    /// Analytic Hessian. Singular components at the origin (m < 2) are
    /// clamped to zero so sampled fields stay finite; the origin belongs to
    /// the degenerate set and is masked in every sharp-weight integral.
    pub fn hess(&self, x: &[f64; 3]) -> [[f64; 3]; 3] {
        let r = self.r(x);
        let mut h = [[0.0; 3]; 3];
        if r == 0.0 {
            if self.m == 2.0 {
                for a in 0..self.n {
                    h[a][a] = 2.0 * self.scale;
                }
            }
            return h;
        }
        let c = self.scale * self.m;
        let t1 = (self.m - 2.0) * r.powf(self.m - 4.0);
        let t2 = r.powf(self.m - 2.0);
        for a in 0..self.n {
            for b in 0..self.n {
                h[a][b] = c * t1 * x[a] * x[b];
                if a == b {
                    h[a][b] += c * t2;
                }
            }
        }
        h
    }

    /// Frobenius norm of the Hessian: `|scale| m sqrt((m-1)^2 + n - 1) r^{m-2}`.
    pub fn hess_norm(&self, r: f64) -> f64 {
        let k = ((self.m - 1.0).powi(2) + (self.n - 1) as f64).sqrt();
        self.scale.abs() * self.m * k * r.powf(self.m - 2.0)
    }

    /// Analytic third derivatives, origin clamped to zero as in `hess`.
    pub fn third(&self, x: &[f64; 3], i: usize, j: usize, k: usize) -> f64 {
        let r = self.r(x);
        if r == 0.0 {
            return 0.0;
        }
        let c = self.scale * self.m * (self.m - 2.0);
        let t1 = (self.m - 4.0) * r.powf(self.m - 6.0);
        let t2 = r.powf(self.m - 4.0);
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        c * (t1 * x[i] * x[j] * x[k] + t2 * (d(i, k) * x[j] + d(j, k) * x[i] + d(i, j) * x[k]))
    }

    /// Frobenius norm of the third tensor as a function of r.
    pub fn third_norm(&self, r: f64) -> f64 {
        let a = self.scale.abs() * self.m * (self.m - 2.0) * (self.m - 4.0);
        let b = self.scale.abs() * self.m * (self.m - 2.0);
        let frob2 = a * a + 6.0 * a * b + (3.0 * self.n as f64 + 6.0) * b * b;
        frob2.abs().sqrt() * r.powf(self.m - 3.0)
    }

    pub fn sample_u(&self, domain: &GridDomain) -> ScalarField {
        ScalarField::from_fn(domain.clone(), |x| self.u(x))
    }

    pub fn sample_f(&self, domain: &GridDomain) -> ScalarField {
        ScalarField::from_fn(domain.clone(), |_| self.f_value)
    }
}

/// Functional kinds the radial oracle can reduce to 1-D quadrature.
#[derive(Debug, Clone)]
pub enum RadialFunctional {
    HessianEnergy { p: f64, beta: f64, epsilon: f64 },
    InverseWeightF { p: f64, q_dual: f64, epsilon: f64 },
    GradientInverse { p: f64, r_exp: f64 },
    ThirdOrder { p: f64, alpha: f64, gamma: f64, epsilon: f64 },
    /// Direct-difference stress seminorm: L^{alpha_tilde} norm of D(V),
    /// V = (eps + |grad u|^2)^{(p-2)/2} grad u.
    StressSeminorm { p: f64, alpha_tilde: f64, epsilon: f64 },
    /// L^{r_exp} norm of |D V| (order 1) or |D^2 V| (order 2),
    /// V = h_eps(|grad u|) |grad u|^{k-2} grad u.
    PowerFieldSeminorm { k: f64, r_exp: f64, order: usize, epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialValue {
    Finite(f64),
    Divergent,
}

impl RadialValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            RadialValue::Finite(v) => Some(*v),
            RadialValue::Divergent => None,
        }
    }
}

/// Frobenius norm of the first derivative of the radial vector field
/// `V = psi(r) x`: |DV|^2 = (psi' r)^2 + 2 psi' psi r + n psi^2.
fn dv_frob(psi: f64, dpsi: f64, r: f64, n: usize) -> f64 {
    let v = (dpsi * r).powi(2) + 2.0 * dpsi * psi * r + n as f64 * psi * psi;
    v.max(0.0).sqrt()
}

/// Frobenius norm of the second derivative of `V = psi(r) x`:
/// D2V = A t@t@t + B (sym deltas), A = psi'' - psi'/r, B = psi'.
fn d2v_frob(dpsi: f64, d2psi: f64, r: f64, n: usize) -> f64 {
    let a = d2psi - dpsi / r;
    let b = dpsi;
    let frob2 = a * a + 6.0 * a * b + (3.0 * n as f64 + 6.0) * b * b;
    frob2.max(0.0).sqrt()
}

/// Numeric first/second derivative of a smooth radial profile. This is a 1-D
/// derivative of a closed-form function, not a grid stencil.
fn profile_derivs(psi: &dyn Fn(f64) -> f64, r: f64) -> (f64, f64) {
    let d = r * 1e-5;
    let (pm, p0, pp) = (psi(r - d), psi(r), psi(r + d));
    ((pp - pm) / (2.0 * d), (pp - 2.0 * p0 + pm) / (d * d))
}

fn integrand<'a>(
    kind: &'a RadialFunctional,
    sol: &'a RadialSolution,
) -> Box<dyn Fn(f64) -> f64 + 'a> {
    let n = sol.n;
    match kind.clone() {
        RadialFunctional::HessianEnergy { p, beta, epsilon } => Box::new(move |r| {
            let g = sol.grad_norm(&[r, 0.0, 0.0]);
            let h = sol.hess_norm(r);
            (epsilon + g * g).powf(0.5 * (p - 2.0 - beta)) * h * h
        }),
        RadialFunctional::InverseWeightF { p, q_dual, epsilon } => Box::new(move |r| {
            let g = sol.grad_norm(&[r, 0.0, 0.0]);
            sol.f_value * sol.f_value / (epsilon + g * g).powf(0.5 * q_dual * (p - 2.0))
        }),
        RadialFunctional::GradientInverse { p, r_exp } => Box::new(move |r| {
            sol.grad_norm(&[r, 0.0, 0.0]).powf(-(p - 1.0) * r_exp)
        }),
        RadialFunctional::ThirdOrder { p, alpha, gamma, epsilon } => Box::new(move |r| {
            let g = sol.grad_norm(&[r, 0.0, 0.0]);
            let h = sol.hess_norm(r);
            let t = sol.third_norm(r);
            (epsilon + g * g).powf(0.5 * (p - 2.0 + alpha)) * h.powf(gamma - 1.0) * t * t
        }),
        RadialFunctional::StressSeminorm { p, alpha_tilde, epsilon } => {
            let psi = move |r: f64| {
                let g = sol.grad_norm(&[r, 0.0, 0.0]);
                (epsilon + g * g).powf(0.5 * (p - 2.0)) * sol.scale * sol.m * r.powf(sol.m - 2.0)
            };
            Box::new(move |r| {
                let (d1, _) = profile_derivs(&psi, r);
                dv_frob(psi(r), d1, r, n).powf(alpha_tilde)
            })
        }
        RadialFunctional::PowerFieldSeminorm { k, r_exp, order, epsilon } => {
            let psi = move |r: f64| {
                let g = sol.grad_norm(&[r, 0.0, 0.0]);
                if g == 0.0 {
                    return 0.0;
                }
                cutoff_h(g, epsilon) * g.powf(k - 2.0) * sol.scale * sol.m * r.powf(sol.m - 2.0)
            };
            Box::new(move |r| {
                let (d1, d2) = profile_derivs(&psi, r);
                let norm = if order == 1 {
                    dv_frob(psi(r), d1, r, n)
                } else {
                    d2v_frob(d1, d2, r, n)
                };
                norm.powf(r_exp)
            })
        }
    }
}

/// Surface measure of the unit sphere boundary factor `r^{n-1}`.
fn sphere_factor(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!(),
    }
}

/// Evaluates a functional on the radial solution over the annulus
/// `r0 <= |x| <= r1` by 1-D adaptive quadrature, or reports divergence when
/// the local power-law exponent at the origin is non-integrable (only
/// possible when r0 = 0).
pub fn radial_functional_exact(
    kind: &RadialFunctional,
    sol: &RadialSolution,
    r0: f64,
    r1: f64,
) -> Result<RadialValue, OracleError> {
    if !(r0 >= 0.0 && r1 > r0) {
        return Err(OracleError::Invalid(format!("bad annulus [{r0}, {r1}]")));
    }
    let g = integrand(kind, sol);
    if r0 == 0.0 {
        // local exponent of the integrand near 0 by log-slope
        let (ra, rb) = (1e-7 * r1, 1e-6 * r1);
        let (ga, gb) = (g(ra), g(rb));
        if ga.is_finite() && gb.is_finite() && ga > 0.0 && gb > 0.0 {
            let sigma = (gb / ga).ln() / (rb / ra).ln();
            if sigma + n_of(sol) <= 1e-9 {
                return Ok(RadialValue::Divergent);
            }
        } else if !ga.is_finite() || !gb.is_finite() {
            return Ok(RadialValue::Divergent);
        }
    }
    let n = sol.n;
    let factor = sphere_factor(n);
    let full = |r: f64| g(r) * factor * r.powi(n as i32 - 1);
    let value = integrate_radial(&full, r0, r1, 1e-9);
    Ok(RadialValue::Finite(value))
}

fn n_of(sol: &RadialSolution) -> f64 {
    sol.n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn family_constants() {
        let s = RadialSolution::new(1.5, 2, 1.0);
        assert_abs_diff_eq!(s.m, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.f_value, -2.0 * 3.0f64.sqrt(), epsilon = 1e-12);

        let s = RadialSolution::new(2.0, 2, 1.0);
        assert_abs_diff_eq!(s.m, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.f_value, -4.0, epsilon = 1e-14);

        let s = RadialSolution::new(2.2, 2, 1.0);
        assert_abs_diff_eq!(s.m, 11.0 / 6.0, epsilon = 1e-14);
        assert!(s.m - 3.0 < 0.0); // third derivative unbounded at the origin
    }

    #[test]
    fn samplers_match_finite_differences_of_u() {
        // cross-check the analytic jet against tiny manual differences
        let s = RadialSolution::new(1.5, 2, 0.7);
        let x = [0.4, -0.3, 0.0];
        let d = 1e-6;
        let shift = |x: &[f64; 3], a: usize, e: f64| {
            let mut y = *x;
            y[a] += e;
            y
        };
        for a in 0..2 {
            let fd = (s.u(&shift(&x, a, d)) - s.u(&shift(&x, a, -d))) / (2.0 * d);
            assert_abs_diff_eq!(fd, s.grad(&x)[a], epsilon = 1e-7);
            for b in 0..2 {
                let fd2 = (s.grad(&shift(&x, b, d))[a] - s.grad(&shift(&x, b, -d))[a]) / (2.0 * d);
                assert_abs_diff_eq!(fd2, s.hess(&x)[a][b], epsilon = 1e-6);
                for c in 0..2 {
                    let fd3 =
                        (s.hess(&shift(&x, c, d))[a][b] - s.hess(&shift(&x, c, -d))[a][b]) / (2.0 * d);
                    assert_abs_diff_eq!(fd3, s.third(&x, a, b, c), epsilon = 1e-5);
                }
            }
        }
    }

    #[test]
    fn norm_profiles_match_component_sums() {
        let s = RadialSolution::new(2.2, 2, 1.3);
        let x = [0.3, 0.4, 0.0];
        let r = 0.5;
        let mut h2 = 0.0;
        let mut t2 = 0.0;
        let h = s.hess(&x);
        for a in 0..2 {
            for b in 0..2 {
                h2 += h[a][b] * h[a][b];
                for c in 0..2 {
                    t2 += s.third(&x, a, b, c).powi(2);
                }
            }
        }
        assert_abs_diff_eq!(h2.sqrt(), s.hess_norm(r), epsilon = 1e-10);
        assert_abs_diff_eq!(t2.sqrt(), s.third_norm(r), epsilon = 1e-10);
    }

    #[test]
    fn gradient_inverse_closed_form() {
        // u = r^3 (p = 1.5), r_exp = 0.9 on the unit disk:
        // int (3 r^2)^{-0.45} 2 pi r dr = 2 pi 3^{-0.45} / 1.1
        let s = RadialSolution::new(1.5, 2, 1.0);
        let kind = RadialFunctional::GradientInverse { p: 1.5, r_exp: 0.9 };
        let v = radial_functional_exact(&kind, &s, 0.0, 1.0).unwrap().finite().unwrap();
        let exact = 2.0 * PI * 3.0f64.powf(-0.45) / 1.1;
        assert_abs_diff_eq!(v, exact, epsilon = 1e-6 * exact);
    }

    #[test]
    fn third_order_divergence_detection() {
        // p = 2.2, alpha = 0.1, gamma = 1: sigma = -2.083 <= -2, divergent
        let s = RadialSolution::new(2.2, 2, 1.0);
        let kind = RadialFunctional::ThirdOrder { p: 2.2, alpha: 0.1, gamma: 1.0, epsilon: 0.0 };
        assert_eq!(radial_functional_exact(&kind, &s, 0.0, 1.0).unwrap(), RadialValue::Divergent);

        // alpha = 2: sigma = -0.5 > -2, finite
        let kind = RadialFunctional::ThirdOrder { p: 2.2, alpha: 2.0, gamma: 1.0, epsilon: 0.0 };
        assert!(radial_functional_exact(&kind, &s, 0.0, 1.0).unwrap().finite().is_some());
    }

    #[test]
    fn annulus_always_finite() {
        let s = RadialSolution::new(2.2, 2, 1.0);
        let kind = RadialFunctional::ThirdOrder { p: 2.2, alpha: 0.1, gamma: 1.0, epsilon: 0.0 };
        let v = radial_functional_exact(&kind, &s, 0.1, 1.0).unwrap();
        assert!(v.finite().is_some());
    }

    #[test]
    fn stress_seminorm_linear_flux() {
        // For the exact radial family the sharp stress is kappa * x, so the
        // direct seminorm integrand is the constant (n kappa^2)^{at/2}.
        let p = 1.9;
        let s = RadialSolution::new(p, 2, 1.0);
        let kappa = (s.m).powf(p - 1.0);
        let kind = RadialFunctional::StressSeminorm { p, alpha_tilde: 3.0, epsilon: 0.0 };
        let v = radial_functional_exact(&kind, &s, 0.0, 1.0).unwrap().finite().unwrap();
        let exact = (2.0 * kappa * kappa).powf(1.5) * PI; // disk area factor
        assert_abs_diff_eq!(v, exact, epsilon = 1e-4 * exact);
    }
}
