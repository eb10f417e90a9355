//! Weighted integral functionals of discrete solutions: degenerate-weight
//! Hessian energies, inverse-weight source norms, the weighted third-order
//! functional, the stress field and its Sobolev seminorm, power vector
//! fields, and the second-linearized weak-form residual.
//!
//! Masking policy: sharp-weight evaluation (`epsilon = 0`) always excludes
//! the degenerate set by the default threshold; regularized evaluation
//! (`epsilon > 0`) never masks. Non-finite integrand values are excluded
//! and counted in `masked_fraction` regardless.

pub mod truncation;

pub use truncation::{cutoff_h, cutoff_h_d1, cutoff_h_d2, truncation_g};

use crate::fields::{
    apply_d, default_degenerate_delta, degenerate_mask, integrate, jet, CellMask, DegenerateKind,
    FieldError, GridDomain, JetField, MaskProvenance, QuadRule, ScalarField, VectorField,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("field error: {0}")]
    Field(#[from] FieldError),
    #[error("functional kind {kind} requires parameter `{name}`")]
    MissingParam { kind: &'static str, name: &'static str },
    #[error("invalid functional: {0}")]
    Invalid(String),
    #[error(
        "third-order functional with gamma = {0} < 1 and a sharp weight needs \
         mask_policy = exclude_Zu_and_degenerate_hessian"
    )]
    NeedsHessianMask(f64),
    #[error("test function support touches the jet boundary margin ({0} nodes)")]
    PhiSupport(usize),
    #[error("functional kind {0} needs a source field")]
    NeedsSource(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskPolicy {
    ExcludeZu,
    ExcludeZuAndDegenerateHessian,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    HessianEnergy,
    InverseWeightF,
    GradientInverse,
    ThirdOrder,
    StressSeminorm,
    PowerFieldSeminorm,
    LinearizedResidual,
}

impl FunctionalKind {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionalKind::HessianEnergy => "hessian_energy",
            FunctionalKind::InverseWeightF => "inverse_weight_f",
            FunctionalKind::GradientInverse => "gradient_inverse",
            FunctionalKind::ThirdOrder => "third_order",
            FunctionalKind::StressSeminorm => "stress_seminorm",
            FunctionalKind::PowerFieldSeminorm => "power_field_seminorm",
            FunctionalKind::LinearizedResidual => "linearized_residual",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "hessian_energy" => FunctionalKind::HessianEnergy,
            "inverse_weight_f" => FunctionalKind::InverseWeightF,
            "gradient_inverse" => FunctionalKind::GradientInverse,
            "third_order" => FunctionalKind::ThirdOrder,
            "stress_seminorm" => FunctionalKind::StressSeminorm,
            "power_field_seminorm" => FunctionalKind::PowerFieldSeminorm,
            "linearized_residual" => FunctionalKind::LinearizedResidual,
            _ => return None,
        })
    }

    /// Parameter names that must be present in a `FunctionalSpec`.
    pub fn required_params(&self) -> &'static [&'static str] {
        match self {
            FunctionalKind::HessianEnergy => &["p", "beta", "epsilon"],
            FunctionalKind::InverseWeightF => &["p", "q", "epsilon"],
            FunctionalKind::GradientInverse => &["p", "r"],
            FunctionalKind::ThirdOrder => &["p", "alpha", "gamma", "epsilon"],
            FunctionalKind::StressSeminorm => &["p", "alpha_tilde", "epsilon"],
            FunctionalKind::PowerFieldSeminorm => &["k", "r", "order", "epsilon"],
            FunctionalKind::LinearizedResidual => &["p", "i", "j"],
        }
    }
}

/// Declarative description of one functional evaluation; admissibility of
/// the exponents is deliberately not enforced (divergence experiments need
/// inadmissible parameters).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalSpec {
    pub kind: FunctionalKind,
    pub params: BTreeMap<String, f64>,
    pub mask_policy: MaskPolicy,
}

impl FunctionalSpec {
    pub fn new(kind: FunctionalKind, params: &[(&str, f64)], mask_policy: MaskPolicy) -> Self {
        FunctionalSpec {
            kind,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            mask_policy,
        }
    }

    pub fn param(&self, name: &'static str) -> Result<f64, FunctionalError> {
        self.params
            .get(name)
            .copied()
            .ok_or(FunctionalError::MissingParam { kind: self.kind.name(), name })
    }

    pub fn validate(&self) -> Result<(), FunctionalError> {
        for name in self.kind.required_params() {
            self.param(name)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub value: f64,
    /// Fraction of eligible (in-window, off-margin) nodes excluded as
    /// degenerate or non-finite.
    pub masked_fraction: f64,
    pub grid_h: f64,
    pub epsilon: f64,
}

/// Masked midpoint quadrature with the module's bookkeeping: margin and
/// window nodes are out of scope; degenerate and non-finite nodes among the
/// eligible remainder are excluded and counted in `masked_fraction`.
fn masked_quadrature(
    domain: &GridDomain,
    margin: usize,
    window: Option<&CellMask>,
    degenerate: Option<&CellMask>,
    epsilon: f64,
    integrand: &[f64],
) -> Result<FunctionalValue, FunctionalError> {
    let nodes = domain.node_count();
    let mut flags = vec![false; nodes];
    let mut eligible = 0usize;
    let mut masked = 0usize;
    for (i, flag) in flags.iter_mut().enumerate() {
        let out_of_scope = domain.in_margin(i, margin)
            || window.map_or(false, |w| w.flags[i]);
        if out_of_scope {
            *flag = true;
            continue;
        }
        eligible += 1;
        if degenerate.map_or(false, |d| d.flags[i]) || !integrand[i].is_finite() {
            *flag = true;
            masked += 1;
        }
    }
    let mask = CellMask { flags, provenance: MaskProvenance::User };
    // masked nodes may hold inf/NaN; zero them so the summation stays clean
    let clean: Vec<f64> = integrand
        .iter()
        .zip(&mask.flags)
        .map(|(&v, &m)| if m { 0.0 } else { v })
        .collect();
    let q = integrate(domain, &clean, Some(&mask), QuadRule::Midpoint)?;
    Ok(FunctionalValue {
        value: q.value,
        masked_fraction: if eligible == 0 { 0.0 } else { masked as f64 / eligible as f64 },
        grid_h: domain.h_min(),
        epsilon,
    })
}

/// Degenerate-gradient mask at the default threshold when the weight is
/// sharp (`epsilon = 0`); no mask otherwise.
fn sharp_zu_mask(j: &JetField, epsilon: f64) -> Option<CellMask> {
    if epsilon > 0.0 {
        None
    } else {
        let delta = default_degenerate_delta(j);
        Some(degenerate_mask(j, DegenerateKind::Gradient, delta).expect("positive delta"))
    }
}

/// Weighted Hessian energy `(eps + |grad u|^2)^{(p-2-beta)/2} |D^2 u|^2`.
pub fn hessian_energy(
    u: &ScalarField,
    p: f64,
    beta: f64,
    epsilon: f64,
    window: Option<&CellMask>,
) -> Result<FunctionalValue, FunctionalError> {
    let j = jet(u, 2)?;
    let e = 0.5 * (p - 2.0 - beta);
    let integrand: Vec<f64> = (0..u.domain.node_count())
        .map(|i| {
            let gn = j.grad_norm[i];
            let hn = j.hess_norm[i];
            (epsilon + gn * gn).powf(e) * hn * hn
        })
        .collect();
    masked_quadrature(&u.domain, j.interior_margin, window, sharp_zu_mask(&j, epsilon).as_ref(), epsilon, &integrand)
}

/// Set when the dual exponent violates the admissible range `q < (p-1)/(p-2)`
/// for `p > 2`; the evaluation itself proceeds (divergence experiments).
pub fn dual_weight_warning(p: f64, q_dual: f64) -> Option<String> {
    if p > 2.0 && q_dual >= (p - 1.0) / (p - 2.0) {
        Some(format!(
            "q = {q_dual} is outside the admissible range q < {} for p = {p}",
            (p - 1.0) / (p - 2.0)
        ))
    } else {
        None
    }
}

/// Inverse-weight source integral `f^2 (eps + |grad u|^2)^{-q(p-2)/2}`.
pub fn inverse_weight_f(
    u: &ScalarField,
    f: &ScalarField,
    p: f64,
    q_dual: f64,
    epsilon: f64,
    window: Option<&CellMask>,
) -> Result<FunctionalValue, FunctionalError> {
    if f.domain != u.domain {
        return Err(FunctionalError::Invalid("source field domain mismatch".into()));
    }
    if let Some(w) = dual_weight_warning(p, q_dual) {
        eprintln!("inverse_weight_f: {w}");
    }
    let j = jet(u, 1)?;
    let e = -0.5 * q_dual * (p - 2.0);
    let integrand: Vec<f64> = (0..u.domain.node_count())
        .map(|i| {
            let gn = j.grad_norm[i];
            f.values[i] * f.values[i] * (epsilon + gn * gn).powf(e)
        })
        .collect();
    masked_quadrature(&u.domain, j.interior_margin, window, sharp_zu_mask(&j, epsilon).as_ref(), epsilon, &integrand)
}

/// Set when `r >= 1`, outside the integrability range; evaluation proceeds.
pub fn inverse_exponent_warning(r_exp: f64) -> Option<String> {
    if r_exp >= 1.0 {
        Some(format!("r = {r_exp} is outside the admissible range r < 1"))
    } else {
        None
    }
}

/// Degenerate-set-masked integral of `|grad u|^{-(p-1) r}` (sharp weight).
pub fn gradient_inverse(
    u: &ScalarField,
    p: f64,
    r_exp: f64,
    window: Option<&CellMask>,
) -> Result<FunctionalValue, FunctionalError> {
    if let Some(w) = inverse_exponent_warning(r_exp) {
        eprintln!("gradient_inverse: {w}");
    }
    let j = jet(u, 1)?;
    let e = -(p - 1.0) * r_exp;
    let integrand: Vec<f64> = j.grad_norm.iter().map(|&gn| gn.powf(e)).collect();
    masked_quadrature(&u.domain, j.interior_margin, window, sharp_zu_mask(&j, 0.0).as_ref(), 0.0, &integrand)
}

/// Weighted third-order functional
/// `W^{(p-2+alpha)/2} |D^2 u|^{gamma-1} |D^3 u|^2` with `W = eps + |grad u|^2`
/// (regularized) or `W = |grad u|^2` (sharp).
pub fn third_order_functional(
    u: &ScalarField,
    p: f64,
    alpha: f64,
    gamma: f64,
    epsilon: f64,
    mask_policy: MaskPolicy,
    window: Option<&CellMask>,
) -> Result<FunctionalValue, FunctionalError> {
    if gamma < 1.0 && epsilon == 0.0 && mask_policy != MaskPolicy::ExcludeZuAndDegenerateHessian {
        return Err(FunctionalError::NeedsHessianMask(gamma));
    }
    let j = jet(u, 3)?;
    let e = 0.5 * (p - 2.0 + alpha);
    let integrand: Vec<f64> = (0..u.domain.node_count())
        .map(|i| {
            let gn = j.grad_norm[i];
            let hn = j.hess_norm[i];
            let tn = j.third_norm[i];
            (epsilon + gn * gn).powf(e) * hn.powf(gamma - 1.0) * tn * tn
        })
        .collect();
    let degenerate = match (mask_policy, epsilon > 0.0) {
        (_, true) | (MaskPolicy::None, false) => None,
        (MaskPolicy::ExcludeZu, false) => sharp_zu_mask(&j, 0.0),
        (MaskPolicy::ExcludeZuAndDegenerateHessian, false) => {
            let zu = sharp_zu_mask(&j, 0.0).expect("sharp weight");
            let dh = degenerate_mask(&j, DegenerateKind::Hessian, default_degenerate_delta(&j))?;
            Some(zu.union(&dh)?)
        }
    };
    masked_quadrature(&u.domain, j.interior_margin, window, degenerate.as_ref(), epsilon, &integrand)
}

/// Node-wise stress field `(eps + |grad u|^2)^{(p-2)/2} grad u`. With the
/// sharp weight the field extends by zero over the degenerate set.
pub fn stress_field(u: &ScalarField, p: f64, epsilon: f64) -> Result<VectorField, FunctionalError> {
    let j = jet(u, 1)?;
    let n = u.domain.n;
    let mut v = VectorField::zeros(u.domain.clone());
    let e = 0.5 * (p - 2.0);
    for i in 0..u.domain.node_count() {
        let gn = j.grad_norm[i];
        let w = epsilon + gn * gn;
        let coef = if w == 0.0 { 0.0 } else { w.powf(e) };
        let g = j.grad_at(i);
        let mut comp = [0.0; 3];
        comp[..n].copy_from_slice(g);
        for c in comp.iter_mut().take(n) {
            *c *= coef;
        }
        v.set(i, &comp[..n]);
    }
    Ok(v)
}

/// The three stress-seminorm readings: the weighted-Hessian integrand of the
/// a-priori estimate, and the `L^{alpha_tilde}` norm of `D(stress)` computed
/// two independent ways (pointwise chain-rule expansion from jets of `u`
/// versus direct differencing of the sampled stress field).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StressSeminorms {
    /// `W^{alpha_tilde (p-2)/2} |D^2 u|^2 sum_kl |u_kl|^{alpha_tilde - 2}`.
    pub weighted_integrand: FunctionalValue,
    /// `int |D(stress)|^{alpha_tilde}` with `D(stress)` expanded through the
    /// chain rule: `D_l V_k = W^{(p-2)/2} u_kl + (p-2) W^{(p-4)/2} u_k (D^2u grad u)_l`.
    pub expansion: FunctionalValue,
    /// Same norm with `D(stress)` obtained by differencing the stress field.
    pub direct: FunctionalValue,
}

pub fn stress_sobolev_seminorm(
    u: &ScalarField,
    p: f64,
    alpha_tilde: f64,
    epsilon: f64,
    window: Option<&CellMask>,
) -> Result<StressSeminorms, FunctionalError> {
    let j = jet(u, 2)?;
    let n = u.domain.n;
    let nodes = u.domain.node_count();

    let mut weighted = Vec::with_capacity(nodes);
    let mut expansion = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let gn = j.grad_norm[i];
        let w = epsilon + gn * gn;
        let hn = j.hess_norm[i];
        let sum_kl: f64 = (0..n)
            .flat_map(|k| (0..n).map(move |l| (k, l)))
            .map(|(k, l)| j.hess_at(i, k, l).abs().powf(alpha_tilde - 2.0))
            .sum();
        weighted.push(w.powf(0.5 * alpha_tilde * (p - 2.0)) * hn * hn * sum_kl);

        // |D V|^2 via the chain rule; both factors vanish on Z_u for eps = 0
        let g = j.grad_at(i);
        let w_half = if w == 0.0 { 0.0 } else { w.powf(0.5 * (p - 2.0)) };
        let w_corr = if w == 0.0 { 0.0 } else { (p - 2.0) * w.powf(0.5 * (p - 4.0)) };
        let mut frob2 = 0.0;
        for k in 0..n {
            for l in 0..n {
                let hg_l: f64 = (0..n).map(|m| j.hess_at(i, l, m) * g[m]).sum();
                let dv = w_half * j.hess_at(i, k, l) + w_corr * g[k] * hg_l;
                frob2 += dv * dv;
            }
        }
        expansion.push(frob2.sqrt().powf(alpha_tilde));
    }

    // direct route: difference the sampled stress components
    let v = stress_field(u, p, epsilon)?;
    let mut dv_frob2 = vec![0.0; nodes];
    for k in 0..n {
        let comp = v.component(k);
        for (l, col) in (0..n).map(|l| (l, apply_d(&u.domain, &comp.values, l))) {
            let _ = l;
            for (acc, d) in dv_frob2.iter_mut().zip(&col) {
                *acc += d * d;
            }
        }
    }
    let direct: Vec<f64> = dv_frob2.iter().map(|&s| s.sqrt().powf(alpha_tilde)).collect();

    let degenerate = sharp_zu_mask(&j, epsilon);
    let margin = j.interior_margin;
    Ok(StressSeminorms {
        weighted_integrand: masked_quadrature(&u.domain, margin, window, degenerate.as_ref(), epsilon, &weighted)?,
        expansion: masked_quadrature(&u.domain, margin, window, degenerate.as_ref(), epsilon, &expansion)?,
        direct: masked_quadrature(&u.domain, margin, window, degenerate.as_ref(), epsilon, &direct)?,
    })
}

/// Truncated power vector field `h_eps(|grad u|) |grad u|^{k-2} grad u`,
/// extended by zero over the degenerate set.
pub fn power_vector_field(
    u: &ScalarField,
    k: f64,
    epsilon: f64,
) -> Result<VectorField, FunctionalError> {
    let j = jet(u, 1)?;
    let n = u.domain.n;
    let mut v = VectorField::zeros(u.domain.clone());
    for i in 0..u.domain.node_count() {
        let gn = j.grad_norm[i];
        let coef = if gn == 0.0 || (epsilon > 0.0 && gn <= epsilon) {
            0.0
        } else {
            cutoff_h(gn, epsilon) * gn.powf(k - 2.0)
        };
        let g = j.grad_at(i);
        let mut comp = [0.0; 3];
        for (c, &ga) in comp.iter_mut().zip(g) {
            *c = coef * ga;
        }
        v.set(i, &comp[..n]);
    }
    Ok(v)
}

/// `L^{r_exp}` quadrature of `|D V|` (order 1) or `|D^2 V|` (order 2) where
/// `V` is the power vector field. No degeneracy masking: the field is
/// extended by zero, so the differences probe the extension directly.
pub fn power_field_seminorm(
    u: &ScalarField,
    k: f64,
    r_exp: f64,
    order: usize,
    epsilon: f64,
    window: Option<&CellMask>,
) -> Result<FunctionalValue, FunctionalError> {
    if !(order == 1 || order == 2) {
        return Err(FunctionalError::Invalid(format!("derivative order {order} not in {{1, 2}}")));
    }
    let v = power_vector_field(u, k, epsilon)?;
    let n = u.domain.n;
    let nodes = u.domain.node_count();
    let mut frob2 = vec![0.0; nodes];
    for c in 0..n {
        let comp = v.component(c);
        for a in 0..n {
            let da = apply_d(&u.domain, &comp.values, a);
            if order == 1 {
                for (acc, d) in frob2.iter_mut().zip(&da) {
                    *acc += d * d;
                }
            } else {
                for b in 0..n {
                    let dab = apply_d(&u.domain, &da, b);
                    for (acc, d) in frob2.iter_mut().zip(&dab) {
                        *acc += d * d;
                    }
                }
            }
        }
    }
    let integrand: Vec<f64> = frob2.iter().map(|&s| s.sqrt().powf(r_exp)).collect();
    // the gradient jet costs margin 1; each extra difference adds one more
    masked_quadrature(&u.domain, 1 + order, window, None, epsilon, &integrand)
}

/// Residual of the second linearized weak equation for axis pair `(i, j)`:
/// the six gradient terms tested against `grad phi`, minus `int f_ij phi`,
/// over `supp(phi)` minus the degenerate set. Near zero for discrete
/// solutions away from degeneracy.
pub fn linearized_residual(
    u: &ScalarField,
    f: &ScalarField,
    phi: &ScalarField,
    i: usize,
    j: usize,
    p: f64,
) -> Result<f64, FunctionalError> {
    let domain = &u.domain;
    let n = domain.n;
    if f.domain != *domain || phi.domain != *domain {
        return Err(FunctionalError::Invalid("field domain mismatch".into()));
    }
    if i >= n || j >= n {
        return Err(FunctionalError::Invalid(format!("axis pair ({i}, {j}) out of range for n = {n}")));
    }
    let ju = jet(u, 3)?;
    let jphi = jet(phi, 1)?;
    let jf = jet(f, 2)?;
    let margin = ju.interior_margin;

    let touching = (0..domain.node_count())
        .filter(|&idx| phi.values[idx] != 0.0 && domain.in_margin(idx, margin))
        .count();
    if touching > 0 {
        return Err(FunctionalError::PhiSupport(touching));
    }

    let zu = sharp_zu_mask(&ju, 0.0).expect("sharp weight");
    let mut integrand = vec![0.0; domain.node_count()];
    for idx in 0..domain.node_count() {
        if phi.values[idx] == 0.0 && jphi.grad_norm[idx] == 0.0 {
            continue;
        }
        if zu.flags[idx] {
            continue;
        }
        let g = ju.grad_at(idx);
        let gn = ju.grad_norm[idx];
        let gphi = jphi.grad_at(idx);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let row_i = ju.hess_row(idx, i);
        let row_j = ju.hess_row(idx, j);
        // gradient of u_ij: third-derivative vector
        let gij = ju.third_row(idx, i, j);
        let pm2 = p - 2.0;
        let t1 = gn.powf(p - 2.0) * dot(gij, gphi);
        let t2 = pm2 * gn.powf(p - 4.0) * dot(g, row_j) * dot(row_i, gphi);
        let t3 = pm2 * (p - 4.0) * gn.powf(p - 6.0)
            * dot(g, row_j) * dot(row_i, g) * dot(g, gphi);
        let t4 = pm2 * gn.powf(p - 4.0) * dot(gij, g) * dot(g, gphi);
        let t5 = pm2 * gn.powf(p - 4.0) * dot(row_i, row_j) * dot(g, gphi);
        let t6 = pm2 * gn.powf(p - 4.0) * dot(row_i, g) * dot(row_j, gphi);
        let rhs = jf.hess_at(idx, i, j) * phi.values[idx];
        integrand[idx] = t1 + t2 + t3 + t4 + t5 + t6 - rhs;
    }
    let q = integrate(domain, &integrand, None, QuadRule::Midpoint)?;
    Ok(q.value)
}

/// Dispatch a declarative spec; returns one `(label, value)` pair per
/// reported number (the stress seminorm reports three).
pub fn evaluate(
    spec: &FunctionalSpec,
    u: &ScalarField,
    f: Option<&ScalarField>,
    window: Option<&CellMask>,
) -> Result<Vec<(String, FunctionalValue)>, FunctionalError> {
    spec.validate()?;
    let name = spec.kind.name().to_string();
    match spec.kind {
        FunctionalKind::HessianEnergy => {
            let v = hessian_energy(u, spec.param("p")?, spec.param("beta")?, spec.param("epsilon")?, window)?;
            Ok(vec![(name, v)])
        }
        FunctionalKind::InverseWeightF => {
            let f = f.ok_or(FunctionalError::NeedsSource("inverse_weight_f"))?;
            let v = inverse_weight_f(u, f, spec.param("p")?, spec.param("q")?, spec.param("epsilon")?, window)?;
            Ok(vec![(name, v)])
        }
        FunctionalKind::GradientInverse => {
            let v = gradient_inverse(u, spec.param("p")?, spec.param("r")?, window)?;
            Ok(vec![(name, v)])
        }
        FunctionalKind::ThirdOrder => {
            let v = third_order_functional(
                u,
                spec.param("p")?,
                spec.param("alpha")?,
                spec.param("gamma")?,
                spec.param("epsilon")?,
                spec.mask_policy,
                window,
            )?;
            Ok(vec![(name, v)])
        }
        FunctionalKind::StressSeminorm => {
            let s = stress_sobolev_seminorm(
                u,
                spec.param("p")?,
                spec.param("alpha_tilde")?,
                spec.param("epsilon")?,
                window,
            )?;
            Ok(vec![
                (format!("{name}_weighted"), s.weighted_integrand),
                (format!("{name}_expansion"), s.expansion),
                (format!("{name}_direct"), s.direct),
            ])
        }
        FunctionalKind::PowerFieldSeminorm => {
            let order = spec.param("order")?;
            let v = power_field_seminorm(
                u,
                spec.param("k")?,
                spec.param("r")?,
                order as usize,
                spec.param("epsilon")?,
                window,
            )?;
            Ok(vec![(name, v)])
        }
        FunctionalKind::LinearizedResidual => {
            Err(FunctionalError::Invalid(
                "linearized_residual needs a test function; call it directly".into(),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{
        manufactured_poisson, radial_functional_exact, RadialFunctional, RadialSolution,
        RadialValue,
    };
    use approx::assert_abs_diff_eq;

    const CENTER: [f64; 3] = [0.0, 0.0, 0.0];

    fn centered_radial(p: f64, scale: f64, cells: usize) -> (ScalarField, RadialSolution) {
        let sol = RadialSolution::new(p, 2, scale);
        let g = GridDomain::centered_box(2, 0.5, cells);
        let u = sol.sample_u(&g);
        (u, sol)
    }

    fn eligible_area(domain: &GridDomain, margin: usize, window: Option<&CellMask>) -> f64 {
        let cell: f64 = (0..domain.n).map(|a| domain.spacing(a)).product();
        (0..domain.node_count())
            .filter(|&i| !domain.in_margin(i, margin) && window.map_or(true, |w| !w.flags[i]))
            .count() as f64
            * cell
    }

    #[test]
    fn hessian_energy_weight_exponent_zero() {
        // u = (x^2 + y^2)/2: |D^2 u|^2 = 2 and the p=2, beta=0 weight is 1
        let g = GridDomain::unit_box(2, 32);
        let u = ScalarField::from_fn(g.clone(), |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let v = hessian_energy(&u, 2.0, 0.0, 1.0, None).unwrap();
        let area = eligible_area(&g, 2, None);
        assert_abs_diff_eq!(v.value, 2.0 * area, epsilon = 1e-10);
        assert_eq!(v.masked_fraction, 0.0);
    }

    #[test]
    fn hessian_energy_beta_continuity() {
        let g = GridDomain::unit_box(2, 24);
        let u = ScalarField::from_fn(g, |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos());
        let a = hessian_energy(&u, 2.0, 0.0, 1.0, None).unwrap().value;
        let b = hessian_energy(&u, 2.0, 1e-6, 1.0, None).unwrap().value;
        assert!((a - b).abs() / a.abs() < 1e-5);
    }

    #[test]
    fn hessian_energy_matches_radial_oracle() {
        let (u, sol) = centered_radial(1.5, 1.0, 128);
        let window = CellMask::annulus(&u.domain, &CENTER, 0.1, 0.4);
        let v = hessian_energy(&u, 1.5, 0.5, 0.0, Some(&window)).unwrap();
        let kind = RadialFunctional::HessianEnergy { p: 1.5, beta: 0.5, epsilon: 0.0 };
        let exact = radial_functional_exact(&kind, &sol, 0.1, 0.4).unwrap().finite().unwrap();
        assert!(
            (v.value - exact).abs() / exact < 0.02,
            "grid {} vs oracle {exact}",
            v.value
        );
    }

    #[test]
    fn inverse_weight_unit_source_p2() {
        let g = GridDomain::unit_box(2, 32);
        let u = ScalarField::from_fn(g.clone(), |x| x[0] + 2.0 * x[1]);
        let f = ScalarField::from_fn(g.clone(), |_| 1.0);
        let v = inverse_weight_f(&u, &f, 2.0, 1.5, 0.3, None).unwrap();
        assert_abs_diff_eq!(v.value, eligible_area(&g, 1, None), epsilon = 1e-10);
    }

    #[test]
    fn dual_weight_warning_threshold() {
        assert!(dual_weight_warning(3.0, 1.5).is_none());
        assert!(dual_weight_warning(3.0, 2.5).is_some());
        assert!(dual_weight_warning(3.0, 2.0).is_some());
        assert!(dual_weight_warning(1.5, 100.0).is_none());
    }

    #[test]
    fn inverse_weight_matches_radial_oracle() {
        let (u, sol) = centered_radial(1.5, 1.0, 128);
        let f = ScalarField::from_fn(u.domain.clone(), |_| sol.f_value);
        let window = CellMask::annulus(&u.domain, &CENTER, 0.1, 0.4);
        let v = inverse_weight_f(&u, &f, 1.5, 1.5, 0.0, Some(&window)).unwrap();
        let kind = RadialFunctional::InverseWeightF { p: 1.5, q_dual: 1.5, epsilon: 0.0 };
        let exact = radial_functional_exact(&kind, &sol, 0.1, 0.4).unwrap().finite().unwrap();
        assert!((v.value - exact).abs() / exact < 0.02);
    }

    #[test]
    fn gradient_inverse_linear_slope_one() {
        let g = GridDomain::unit_box(2, 32);
        let u = ScalarField::from_fn(g.clone(), |x| x[0]);
        let v = gradient_inverse(&u, 1.7, 0.9, None).unwrap();
        assert_abs_diff_eq!(v.value, eligible_area(&g, 1, None), epsilon = 1e-10);
    }

    #[test]
    fn gradient_inverse_matches_radial_oracle() {
        let (u, sol) = centered_radial(1.5, 1.0, 128);
        let window = CellMask::annulus(&u.domain, &CENTER, 0.1, 0.4);
        let v = gradient_inverse(&u, 1.5, 0.9, Some(&window)).unwrap();
        let kind = RadialFunctional::GradientInverse { p: 1.5, r_exp: 0.9 };
        let exact = radial_functional_exact(&kind, &sol, 0.1, 0.4).unwrap().finite().unwrap();
        assert!((v.value - exact).abs() / exact < 0.02);
    }

    #[test]
    fn third_order_constant_third_derivative() {
        // u = x^3: |D^3 u|^2 = 36 and alpha = 0, gamma = 1 make both weights 1
        let g = GridDomain::unit_box(2, 32);
        let u = ScalarField::from_fn(g.clone(), |x| x[0].powi(3));
        let v = third_order_functional(&u, 2.0, 0.0, 1.0, 1.0, MaskPolicy::None, None).unwrap();
        assert_abs_diff_eq!(v.value, 36.0 * eligible_area(&g, 3, None), epsilon = 1e-8);
    }

    #[test]
    fn third_order_gamma_below_one_needs_hessian_mask() {
        let g = GridDomain::unit_box(2, 16);
        let u = ScalarField::from_fn(g, |x| x[0].powi(3));
        let err = third_order_functional(&u, 2.0, 1.0, 0.5, 0.0, MaskPolicy::ExcludeZu, None);
        assert!(matches!(err, Err(FunctionalError::NeedsHessianMask(_))));
        // the regularized weight lifts the requirement
        assert!(third_order_functional(&u, 2.0, 1.0, 0.5, 0.1, MaskPolicy::ExcludeZu, None).is_ok());
    }

    #[test]
    fn third_order_matches_radial_oracle() {
        let (u, sol) = centered_radial(2.2, 1.0, 128);
        let window = CellMask::annulus(&u.domain, &CENTER, 0.1, 0.4);
        let v =
            third_order_functional(&u, 2.2, 2.0, 1.0, 0.0, MaskPolicy::ExcludeZu, Some(&window))
                .unwrap();
        let kind =
            RadialFunctional::ThirdOrder { p: 2.2, alpha: 2.0, gamma: 1.0, epsilon: 0.0 };
        let exact = radial_functional_exact(&kind, &sol, 0.1, 0.4).unwrap().finite().unwrap();
        assert!(
            (v.value - exact).abs() / exact < 0.05,
            "grid {} vs oracle {exact}",
            v.value
        );
    }

    #[test]
    fn third_order_divergent_parameters_flagged_by_oracle() {
        let sol = RadialSolution::new(2.2, 2, 1.0);
        let kind = RadialFunctional::ThirdOrder { p: 2.2, alpha: 0.1, gamma: 1.0, epsilon: 0.0 };
        assert!(matches!(radial_functional_exact(&kind, &sol, 0.0, 0.4), Ok(RadialValue::Divergent)));
    }

    #[test]
    fn stress_field_direct_arithmetic() {
        let g = GridDomain::unit_box(2, 16);
        let u = ScalarField::from_fn(g.clone(), |x| 3.0 * x[0] + 4.0 * x[1]);
        let v = stress_field(&u, 3.0, 0.0).unwrap();
        let mid = g.index(&[8, 8]);
        assert_abs_diff_eq!(v.at(mid)[0], 15.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v.at(mid)[1], 20.0, epsilon = 1e-9);
    }

    #[test]
    fn stress_field_p2_is_gradient() {
        let g = GridDomain::unit_box(2, 16);
        let u = ScalarField::from_fn(g, |x| (x[0] * 2.0).sin() + x[1] * x[1]);
        let j = jet(&u, 1).unwrap();
        let v = stress_field(&u, 2.0, 0.37).unwrap();
        for i in 0..u.domain.node_count() {
            assert_abs_diff_eq!(v.at(i)[0], j.grad_at(i)[0], epsilon = 1e-13);
            assert_abs_diff_eq!(v.at(i)[1], j.grad_at(i)[1], epsilon = 1e-13);
        }
    }

    #[test]
    fn stress_field_radial_linear() {
        // p = 1.5, u = r^3: |stress| = sqrt(3) r exactly
        let (u, _) = centered_radial(1.5, 1.0, 64);
        let v = stress_field(&u, 1.5, 0.0).unwrap();
        let g = &u.domain;
        let i = g.index(&[48, 32]);
        let x = g.position(i);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        assert!((v.norm_at(i) - 3.0f64.sqrt() * r).abs() < 1e-3);
    }

    #[test]
    fn stress_seminorm_p2_direct_identity() {
        // p = 2: stress = grad u, so the direct norm is the Hessian alpha_tilde-norm
        let g = GridDomain::unit_box(2, 48);
        let u = ScalarField::from_fn(g, |x| (2.0 * x[0]).sin() * (1.0 + x[1]).ln());
        let s = stress_sobolev_seminorm(&u, 2.0, 3.0, 0.2, None).unwrap();
        let j = jet(&u, 2).unwrap();
        let integrand: Vec<f64> = j.hess_norm.iter().map(|&hn| hn.powi(3)).collect();
        let margin = CellMask::boundary_margin(&u.domain, 2);
        let expected =
            integrate(&u.domain, &integrand, Some(&margin), QuadRule::Midpoint).unwrap().value;
        assert!((s.direct.value - expected).abs() / expected < 1e-10);
    }

    #[test]
    fn stress_seminorm_p2_half_x_squared() {
        let g = GridDomain::unit_box(2, 32);
        let u = ScalarField::from_fn(g.clone(), |x| 0.5 * x[0] * x[0]);
        let s = stress_sobolev_seminorm(&u, 2.0, 3.0, 0.5, None).unwrap();
        let area = eligible_area(&g, 2, None);
        assert_abs_diff_eq!(s.direct.value, area, epsilon = 1e-9);
        // weighted integrand: |D^2u|^2 * sum_kl |u_kl| = 1 * 1
        assert_abs_diff_eq!(s.weighted_integrand.value, area, epsilon = 1e-9);
    }

    #[test]
    fn stress_seminorm_routes_agree_on_radial_benchmark() {
        let (u, _) = centered_radial(1.9, 1.0, 128);
        let window = CellMask::annulus(&u.domain, &CENTER, 0.05, 0.4);
        let s = stress_sobolev_seminorm(&u, 1.9, 3.0, 0.0, Some(&window)).unwrap();
        let rel = (s.expansion.value - s.direct.value).abs() / s.direct.value;
        assert!(rel < 0.05, "expansion {} vs direct {}", s.expansion.value, s.direct.value);
    }

    #[test]
    fn power_field_reduces_to_gradient() {
        // k = 1 and |grad u| >= 2 eps: h_eps(t) = t, so V = grad u
        let g = GridDomain::unit_box(2, 24);
        let u = ScalarField::from_fn(g, |x| 2.0 * x[0] + x[1]);
        let v = power_vector_field(&u, 1.0, 0.05).unwrap();
        let j = jet(&u, 1).unwrap();
        for i in 0..u.domain.node_count() {
            assert_abs_diff_eq!(v.at(i)[0], j.grad_at(i)[0], epsilon = 1e-12);
            assert_abs_diff_eq!(v.at(i)[1], j.grad_at(i)[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn power_field_seminorm_constant_field_zero() {
        let g = GridDomain::unit_box(2, 24);
        let u = ScalarField::from_fn(g, |x| 0.7 * x[0] + 0.3 * x[1]);
        let v = power_field_seminorm(&u, 2.0, 1.0, 1, 0.05, None).unwrap();
        assert_abs_diff_eq!(v.value, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn linearized_residual_phi_linearity() {
        let g = GridDomain::unit_box(2, 32);
        let (u, f) = manufactured_poisson(&g);
        let phi = ScalarField::from_fn(g.clone(), |x| {
            let d2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
            let t2 = d2 / (0.15 * 0.15);
            if t2 >= 1.0 { 0.0 } else { (1.0 - t2).powi(3) }
        });
        let phi2 = ScalarField::new(
            g.clone(),
            phi.values.iter().map(|v| 2.0 * v).collect(),
        )
        .unwrap();
        let r1 = linearized_residual(&u, &f, &phi, 0, 1, 2.0).unwrap();
        let r2 = linearized_residual(&u, &f, &phi2, 0, 1, 2.0).unwrap();
        assert!((r2 - 2.0 * r1).abs() <= 1e-12 * r1.abs().max(1.0));
    }

    #[test]
    fn linearized_residual_decays_for_manufactured_solution() {
        let residual_at = |cells: usize| {
            let g = GridDomain::unit_box(2, cells);
            let (u, f) = manufactured_poisson(&g);
            let phi = ScalarField::from_fn(g, |x| {
                let d2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
                let t2 = d2 / (0.2 * 0.2);
                if t2 >= 1.0 { 0.0 } else { (1.0 - t2).powi(3) }
            });
            linearized_residual(&u, &f, &phi, 0, 0, 2.0).unwrap().abs()
        };
        let order = (residual_at(32) / residual_at(64)).log2();
        assert!(order >= 1.0, "observed order {order}");
    }

    #[test]
    fn linearized_residual_rejects_wide_support() {
        let g = GridDomain::unit_box(2, 16);
        let (u, f) = manufactured_poisson(&g);
        let phi = ScalarField::from_fn(g, |_| 1.0);
        assert!(matches!(
            linearized_residual(&u, &f, &phi, 0, 1, 2.0),
            Err(FunctionalError::PhiSupport(_))
        ));
    }

    #[test]
    fn spec_validation_and_dispatch() {
        let g = GridDomain::unit_box(2, 32);
        let u = ScalarField::from_fn(g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let spec = FunctionalSpec::new(
            FunctionalKind::HessianEnergy,
            &[("p", 2.0), ("beta", 0.0), ("epsilon", 1.0)],
            MaskPolicy::None,
        );
        let rows = evaluate(&spec, &u, None, None).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].0, "hessian_energy");

        let bad = FunctionalSpec::new(FunctionalKind::HessianEnergy, &[("p", 2.0)], MaskPolicy::None);
        assert!(matches!(bad.validate(), Err(FunctionalError::MissingParam { .. })));

        let stress = FunctionalSpec::new(
            FunctionalKind::StressSeminorm,
            &[("p", 2.0), ("alpha_tilde", 3.0), ("epsilon", 0.5)],
            MaskPolicy::None,
        );
        let rows = evaluate(&stress, &u, None, None).unwrap();
        assert_eq!(rows.len(), 3);
    }

    #[test]
    fn epsilon_monotone_weights() {
        // for p < 2 the regularized weight decreases in epsilon pointwise,
        // so the hessian energy does too
        let (u, _) = centered_radial(1.5, 1.0, 48);
        let vals: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| hessian_energy(&u, 1.5, 0.5, e, None).unwrap().value)
            .collect();
        assert!(vals[0] < vals[1] && vals[1] < vals[2]);
    }
}
