//! Frozen-coefficient Picard solver for the regularized problem
//! `-div((eps + |grad u|^2)^{(p-2)/2} grad u) = f` with Dirichlet data,
//! discretized in flux form with harmonic-mean face coefficients on the
//! 2n+1-point stencil.

mod cg;

pub use cg::{conjugate_gradient, CgResult};

use crate::fields::{
    integrate, jet, CellMask, FieldError, GridDomain, MaskProvenance, QuadRule, ScalarField,
};
use serde::Serialize;
use thiserror::Error;

/// Cold solves below this epsilon are refused; use epsilon-continuation.
pub const MIN_COLD_EPSILON: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("field error: {0}")]
    Field(#[from] FieldError),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error(
        "cold solve at epsilon = {0} < {MIN_COLD_EPSILON} refused; \
         use continuation_solve with a decreasing epsilon schedule"
    )]
    ColdEpsilon(f64),
    #[error("NaN detected at Picard iteration {0}")]
    NumericalBreakdown(usize),
}

/// Problem data for the regularized Dirichlet problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub p: f64,
    pub epsilon: f64,
    /// Source term sampled at every node.
    pub f: ScalarField,
    /// Dirichlet trace, full-length vector; only boundary entries are read.
    pub g: Vec<f64>,
    pub domain: GridDomain,
}

impl ProblemSpec {
    pub fn new(
        p: f64,
        epsilon: f64,
        f: ScalarField,
        g: Vec<f64>,
        domain: GridDomain,
    ) -> Result<Self, SolverError> {
        if !(p > 1.0) {
            return Err(SolverError::Invalid(format!("p = {p} must be > 1")));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(SolverError::Invalid(format!("epsilon = {epsilon} not in [0, 1)")));
        }
        if f.domain != domain {
            return Err(SolverError::Invalid("source field domain mismatch".into()));
        }
        if g.len() != domain.node_count() {
            return Err(SolverError::Invalid("boundary trace length mismatch".into()));
        }
        Ok(ProblemSpec { p, epsilon, f, g, domain })
    }

    /// Builds the trace vector and spec from a boundary function.
    pub fn with_trace_fn(
        p: f64,
        epsilon: f64,
        f: ScalarField,
        domain: GridDomain,
        trace: impl Fn(&[f64; 3]) -> f64,
    ) -> Result<Self, SolverError> {
        let g = (0..domain.node_count())
            .map(|i| if domain.is_boundary(i) { trace(&domain.position(i)) } else { 0.0 })
            .collect();
        Self::new(p, epsilon, f, g, domain)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub linear_solve_iterations: Vec<usize>,
    pub converged: bool,
    pub epsilon_schedule: Vec<f64>,
    /// Discrete regularized energy along the iterates.
    pub energy_history: Vec<f64>,
    /// False when the energy increased at some damped step.
    pub energy_monotone: bool,
}

/// Node-wise diffusion coefficient `(eps + |grad u|^2)^{(p-2)/2}`.
///
/// With `eps = 0`, `p < 2`, and a vanishing gradient the coefficient is
/// infinite; such nodes are flagged in the returned mask and their value is
/// clamped to 0 so the output stays finite.
pub fn coefficient(u: &ScalarField, p: f64, epsilon: f64) -> (ScalarField, CellMask) {
    let j = jet(u, 1).expect("grid large enough for first-order jets");
    let mut mask = CellMask::empty(&u.domain, MaskProvenance::DegenerateGradient);
    let exponent = 0.5 * (p - 2.0);
    let values: Vec<f64> = j
        .grad_norm
        .iter()
        .enumerate()
        .map(|(i, &gn)| {
            let w = epsilon + gn * gn;
            if w == 0.0 && exponent < 0.0 {
                mask.flags[i] = true;
                0.0
            } else {
                w.powf(exponent)
            }
        })
        .collect();
    (ScalarField { domain: u.domain.clone(), values }, mask)
}

/// Interior-node bookkeeping for the flux stencil.
struct FluxSystem {

    interior: Vec<usize>,
    interior_of: Vec<usize>,
    /// (neighbor node, 1/h^2) per face, per interior node.
    faces: Vec<Vec<(usize, f64)>>,
}

const NOT_INTERIOR: usize = usize::MAX;

impl FluxSystem {
    fn new(domain: &GridDomain) -> Self {
        let nodes = domain.node_count();
        let interior: Vec<usize> = (0..nodes).filter(|&i| !domain.is_boundary(i)).collect();
        let mut interior_of = vec![NOT_INTERIOR; nodes];
        for (k, &i) in interior.iter().enumerate() {
            interior_of[i] = k;
        }
        let faces = interior
            .iter()
            .map(|&i| {
                let c = domain.coords(i);
                let mut f = Vec::with_capacity(2 * domain.n);
                for a in 0..domain.n {
                    let inv_h2 = 1.0 / (domain.spacing(a) * domain.spacing(a));
                    let mut cm = c;
                    cm[a] -= 1;
                    f.push((domain.index(&cm[..domain.n]), inv_h2));
                    let mut cp = c;
                    cp[a] += 1;
                    f.push((domain.index(&cp[..domain.n]), inv_h2));
                }
                f
            })
            .collect();
        FluxSystem { interior, interior_of, faces }
    }

    fn harmonic(a: f64, b: f64) -> f64 {
        if a + b <= 0.0 {
            0.0
        } else {
            2.0 * a * b / (a + b)
        }
    }

    /// `y = A x` on interior unknowns, boundary values treated as zero.
    fn apply(&self, coef: &[f64], x: &[f64], y: &mut [f64]) {
        for (k, &i) in self.interior.iter().enumerate() {
            let ai = coef[i];
            let xi = x[k];
            let mut acc = 0.0;
            for &(nb, inv_h2) in &self.faces[k] {
                let face = Self::harmonic(ai, coef[nb]);
                let xnb = match self.interior_of[nb] {
                    NOT_INTERIOR => 0.0,
                    knb => x[knb],
                };
                acc += face * (xi - xnb) * inv_h2;
            }
            y[k] = acc;
        }
    }

    /// Right-hand side: source plus boundary flux contributions.
    fn rhs(&self, coef: &[f64], f: &[f64], g: &[f64]) -> Vec<f64> {
        self.interior
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let mut b = f[i];
                for &(nb, inv_h2) in &self.faces[k] {
                    if self.interior_of[nb] == NOT_INTERIOR {
                        b += Self::harmonic(coef[i], coef[nb]) * g[nb] * inv_h2;
                    }
                }
                b
            })
            .collect()
    }

    fn gather(&self, u: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&i| u[i]).collect()
    }

    fn scatter(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        let mut u = g.to_vec();
        for (k, &i) in self.interior.iter().enumerate() {
            u[i] = x[k];
        }
        u
    }
}

/// Scaled infinity norm of the algebraic residual of the nonlinear system:
/// `max_i |(-div(a(u) grad u))_i - f_i| * h^n` over interior nodes.
pub fn residual(u: &ScalarField, spec: &ProblemSpec) -> f64 {
    let sys = FluxSystem::new(&spec.domain);
    let (coef, _) = coefficient(u, spec.p, spec.epsilon);
    let x = sys.gather(&u.values);
    let mut ax = vec![0.0; x.len()];
    sys.apply(&coef.values, &x, &mut ax);
    let b = sys.rhs(&coef.values, &spec.f.values, &u.values);
    let cell: f64 = (0..spec.domain.n).map(|a| spec.domain.spacing(a)).product();
    ax.iter()
        .zip(&b)
        .map(|(a, bi)| (a - bi).abs())
        .fold(0.0, f64::max)
        * cell
}

/// Discrete regularized energy `(1/p) int (eps + |grad u|^2)^{p/2} - int f u`
/// over the interior (margin-1 band excluded).
pub fn energy(u: &ScalarField, spec: &ProblemSpec) -> f64 {
    let j = jet(u, 1).expect("grid large enough");
    let mask = CellMask::boundary_margin(&spec.domain, 1);
    let integrand: Vec<f64> = (0..spec.domain.node_count())
        .map(|i| {
            let gn = j.grad_norm[i];
            (spec.epsilon + gn * gn).powf(0.5 * spec.p) / spec.p
                - spec.f.values[i] * u.values[i]
        })
        .collect();
    integrate(&spec.domain, &integrand, Some(&mask), QuadRule::Midpoint)
        .unwrap()
        .value
}

fn picard_inner(
    spec: &ProblemSpec,
    u0: &ScalarField,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> Result<(ScalarField, SolveReport), SolverError> {
    if !(spec.epsilon > 0.0) {
        return Err(SolverError::Invalid(
            "picard_solve needs epsilon > 0 (epsilon = 0 is for functional evaluation only)"
                .into(),
        ));
    }
    if !(0.0 < damping && damping <= 1.0) {
        return Err(SolverError::Invalid(format!("damping = {damping} not in (0, 1]")));
    }
    let sys = FluxSystem::new(&spec.domain);
    // enforce the boundary trace on the initial iterate
    let mut u = ScalarField::new(spec.domain.clone(), sys.scatter(&sys.gather(&u0.values), &spec.g))?;

    let mut residual_history = Vec::new();
    let mut linear_iters = Vec::new();
    let mut energy_history = vec![energy(&u, spec)];
    let mut converged = false;

    let r0 = residual(&u, spec);
    residual_history.push(r0);
    if r0 <= tol {
        converged = true;
    }

    let mut iterations = 0;
    while !converged && iterations < max_iter {
        iterations += 1;
        let (coef, _) = coefficient(&u, spec.p, spec.epsilon);
        let b = sys.rhs(&coef.values, &spec.f.values, &spec.g);
        let mut x = sys.gather(&u.values);
        let apply = |xv: &[f64], yv: &mut [f64]| sys.apply(&coef.values, xv, yv);
        let cg = conjugate_gradient(&apply, &b, &mut x, 0.01 * tol, 100_000);
        linear_iters.push(cg.iterations);

        let w_vals = sys.scatter(&x, &spec.g);
        if w_vals.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NumericalBreakdown(iterations));
        }
        let w = ScalarField { domain: spec.domain.clone(), values: w_vals };

        // accept the undamped candidate outright if it already converges
        let res_w = residual(&w, spec);
        if res_w <= tol {
            residual_history.push(res_w);
            energy_history.push(energy(&w, spec));
            u = w;
            converged = true;
            break;
        }

        let next: Vec<f64> = u
            .values
            .iter()
            .zip(&w.values)
            .map(|(uk, wk)| uk + damping * (wk - uk))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NumericalBreakdown(iterations));
        }
        u = ScalarField { domain: spec.domain.clone(), values: next };
        let res = residual(&u, spec);
        residual_history.push(res);
        energy_history.push(energy(&u, spec));
        if res <= tol {
            converged = true;
        }
    }

    let energy_monotone = energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs());
    let report = SolveReport {
        iterations,
        residual_history,
        linear_solve_iterations: linear_iters,
        converged,
        epsilon_schedule: vec![spec.epsilon],
        energy_history,
        energy_monotone,
    };
    Ok((u, report))
}

/// Damped frozen-coefficient iteration: each step solves the linear SPD
/// system `-div(a_k grad w) = f` with `a_k = coefficient(u_k)` and blends
/// `u_{k+1} = u_k + damping (w - u_k)`. Non-convergence returns the best
/// iterate with `converged = false`.
pub fn picard_solve(
    spec: &ProblemSpec,
    u0: &ScalarField,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> Result<(ScalarField, SolveReport), SolverError> {
    if spec.epsilon < MIN_COLD_EPSILON {
        return Err(SolverError::ColdEpsilon(spec.epsilon));
    }
    picard_inner(spec, u0, tol, max_iter, damping)
}

/// Warm-started epsilon-continuation: solves at `schedule[0]` from `u0`,
/// then each subsequent epsilon from the previous solution. Returns the
/// solution and report per epsilon.
pub fn continuation_solve(
    spec: &ProblemSpec,
    schedule: &[f64],
    u0: &ScalarField,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> Result<Vec<(f64, ScalarField, SolveReport)>, SolverError> {
    if schedule.is_empty() {
        return Err(SolverError::Invalid("empty epsilon schedule".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) || *schedule.last().unwrap() <= 0.0 {
        return Err(SolverError::Invalid(
            "epsilon schedule must be strictly decreasing and positive".into(),
        ));
    }
    if schedule[0] < MIN_COLD_EPSILON {
        return Err(SolverError::ColdEpsilon(schedule[0]));
    }
    let mut out = Vec::with_capacity(schedule.len());
    let mut current = u0.clone();
    for &eps in schedule {
        let stage = ProblemSpec { epsilon: eps, ..spec.clone() };
        let (u, mut report) = picard_inner(&stage, &current, tol, max_iter, damping)?;
        report.epsilon_schedule = schedule.to_vec();
        current = u.clone();
        out.push((eps, u, report));
    }
    Ok(out)
}

pub mod defaults {
    pub const DAMPING: f64 = 0.7;
    pub const TOL: f64 = 1e-8;
    pub const MAX_ITER: usize = 200;
}
