//! Sweep execution: builds benchmark fields over the axis grid, evaluates
//! the configured functionals, and derives refinement verdicts and
//! admissibility annotations.

use crate::config::{Axes, Benchmark, ExperimentConfig, ExponentSettings};
use crate::LabError;
use plaplab_core::exponents::{self, ExponentParams};
use plaplab_core::fields::{load_scalar_field, CellMask, GridDomain, ScalarField};
use plaplab_core::functionals::{
    dual_weight_warning, evaluate, FunctionalKind, FunctionalSpec,
};
use plaplab_core::oracles::{manufactured_poisson, RadialFunctional, RadialSolution};
use plaplab_core::solver::{continuation_solve, residual, ProblemSpec, SolveReport};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Ratio band for the "bounded" verdict over the h-axis.
pub const BOUNDED_BAND: f64 = 1.25;
/// Per-halving growth factor for the "divergent" verdict.
pub const DIVERGENT_FACTOR: f64 = 2.0;

/// One evaluated data point with its derived columns.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub kind: String,
    pub p: Option<f64>,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub k: Option<f64>,
    pub alpha_tilde: Option<f64>,
    pub h: f64,
    pub value: f64,
    pub masked_fraction: f64,
    /// value(h) / value(2h) within the row's parameter group.
    pub refinement_ratio: Option<f64>,
    pub verdict: String,
    pub admissible: String,
    pub solver_converged: bool,
}

impl Row {
    fn from_params(
        kind: String,
        params: &BTreeMap<String, f64>,
        h: f64,
        value: f64,
        masked_fraction: f64,
        solver_converged: bool,
    ) -> Row {
        let get = |n: &str| params.get(n).copied();
        Row {
            kind,
            p: get("p"),
            epsilon: get("epsilon"),
            alpha: get("alpha"),
            beta: get("beta"),
            gamma: get("gamma"),
            q: get("q"),
            r: get("r"),
            k: get("k"),
            alpha_tilde: get("alpha_tilde"),
            h,
            value,
            masked_fraction,
            refinement_ratio: None,
            verdict: String::new(),
            admissible: String::new(),
            solver_converged,
        }
    }

    /// Everything but the h axis; rows sharing this key form one
    /// refinement-study group.
    fn group_key(&self) -> (String, [u64; 9]) {
        let b = |v: Option<f64>| v.map_or(u64::MAX, f64::to_bits);
        (
            self.kind.clone(),
            [
                b(self.p),
                b(self.epsilon),
                b(self.alpha),
                b(self.beta),
                b(self.gamma),
                b(self.q),
                b(self.r),
                b(self.k),
                b(self.alpha_tilde),
            ],
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<Row>,
}

/// The field (and companions) evaluated at one (p, epsilon, cells) point.
pub struct FieldBundle {
    pub u: ScalarField,
    pub f: Option<ScalarField>,
    pub converged: bool,
    pub solve_residual: Option<f64>,
    pub solve_report: Option<SolveReport>,
}

pub fn annulus_window(domain: &GridDomain, r0: f64, r1: f64) -> CellMask {
    let mut center = [0.0; 3];
    for a in 0..domain.n {
        center[a] = domain.origin[a] + 0.5 * domain.extent[a];
    }
    CellMask::annulus(domain, &center, r0, r1)
}

/// Builds the benchmark field at one axis point, solving when configured.
pub fn build_field(
    config: &ExperimentConfig,
    p: f64,
    epsilon: f64,
    cells: usize,
) -> Result<FieldBundle, LabError> {
    match &config.benchmark {
        Benchmark::Radial { n, scale } => {
            let sol = RadialSolution::new(p, *n, *scale);
            let domain = GridDomain::centered_box(*n, 0.5, cells);
            let f = sol.sample_f(&domain);
            if !config.solve.enabled {
                return Ok(FieldBundle {
                    u: sol.sample_u(&domain),
                    f: Some(f),
                    converged: true,
                    solve_residual: None,
                    solve_report: None,
                });
            }
            let spec = ProblemSpec::with_trace_fn(p, 1.0e-2, f.clone(), domain.clone(), |x| {
                sol.u(x)
            })?;
            solve_bundle(config, spec, epsilon, f)
        }
        Benchmark::Manufactured => {
            let domain = GridDomain::unit_box(2, cells);
            let (u_exact, f) = manufactured_poisson(&domain);
            if !config.solve.enabled {
                return Ok(FieldBundle {
                    u: u_exact,
                    f: Some(f),
                    converged: true,
                    solve_residual: None,
                    solve_report: None,
                });
            }
            let spec = ProblemSpec::with_trace_fn(p, 1.0e-2, f.clone(), domain.clone(), |_| 0.0)?;
            solve_bundle(config, spec, epsilon, f)
        }
        Benchmark::File(path) => {
            if config.solve.enabled {
                return Err(LabError::Config(crate::config::ConfigError::Invalid(
                    "solve.enabled is not supported with a file benchmark".into(),
                )));
            }
            let (u, _name) = load_scalar_field(path)?;
            Ok(FieldBundle {
                u,
                f: None,
                converged: true,
                solve_residual: None,
                solve_report: None,
            })
        }
    }
}

fn solve_bundle(
    config: &ExperimentConfig,
    spec: ProblemSpec,
    epsilon: f64,
    f: ScalarField,
) -> Result<FieldBundle, LabError> {
    let mut schedule = config.solve.schedule.clone();
    let last = *schedule.last().unwrap();
    if epsilon > 0.0 && epsilon < last {
        schedule.push(epsilon);
    }
    let u0 = ScalarField::zeros(spec.domain.clone());
    let stages = continuation_solve(
        &spec,
        &schedule,
        &u0,
        config.solve.tol,
        config.solve.max_iter,
        config.solve.damping,
    )?;
    let (eps_final, u, report) = stages.into_iter().last().unwrap();
    let final_spec = ProblemSpec { epsilon: eps_final, ..spec };
    let res = residual(&u, &final_spec);
    Ok(FieldBundle {
        u,
        f: Some(f),
        converged: report.converged,
        solve_residual: Some(res),
        solve_report: Some(report),
    })
}

/// Expands one functional spec into fully resolved parameter maps: fixed
/// parameters win, then the sweep axes supply one value per combination.
fn expand_params(
    spec: &FunctionalSpec,
    p: f64,
    epsilon: f64,
    axes: &Axes,
) -> Result<Vec<BTreeMap<String, f64>>, LabError> {
    let mut combos: Vec<BTreeMap<String, f64>> = vec![spec.params.clone()];
    for name in spec.kind.required_params() {
        if spec.params.contains_key(*name) {
            continue;
        }
        let choices: Vec<f64> = match *name {
            "p" => vec![p],
            "epsilon" => vec![epsilon],
            "alpha" => axes.alpha.clone(),
            "gamma" => axes.gamma.clone(),
            "alpha_tilde" => axes.alpha_tilde.clone(),
            "k" => axes.k.clone(),
            _ => Vec::new(),
        };
        if choices.is_empty() {
            return Err(LabError::Config(crate::config::ConfigError::Invalid(format!(
                "functional {} needs parameter `{name}`: set it on the functional or as a sweep axis",
                spec.kind.name()
            ))));
        }
        combos = combos
            .into_iter()
            .flat_map(|base| {
                choices.iter().map(move |&v| {
                    let mut m = base.clone();
                    m.insert(name.to_string(), v);
                    m
                })
            })
            .collect();
    }
    Ok(combos)
}

fn axis_or_default(values: &[f64], default: f64) -> Vec<f64> {
    if values.is_empty() { vec![default] } else { values.to_vec() }
}

/// Runs the full sweep: every (p, epsilon, h) point gets its field, every
/// functional is evaluated on every parameter combination, and the rows are
/// sorted, ratio-annotated, and verdict-labelled. Deterministic for a fixed
/// config regardless of thread count.
pub fn run(config: &ExperimentConfig) -> Result<SweepReport, LabError> {
    let ps = axis_or_default(&config.axes.p, 2.0);
    let epsilons = axis_or_default(&config.axes.epsilon, 0.0);
    let cells_list: Vec<usize> =
        if config.axes.cells.is_empty() { vec![64] } else { config.axes.cells.clone() };

    let mut points = Vec::new();
    for &p in &ps {
        for &eps in &epsilons {
            for &cells in &cells_list {
                points.push((p, eps, cells));
            }
        }
    }

    let per_point: Vec<Result<Vec<Row>, LabError>> = points
        .par_iter()
        .map(|&(p, eps, cells)| {
            let bundle = build_field(config, p, eps, cells)?;
            let domain = &bundle.u.domain;
            let h = domain.h_min();
            let window = config.window.map(|(r0, r1)| annulus_window(domain, r0, r1));
            let mut rows = Vec::new();
            if config.solve.enabled {
                let mut params = BTreeMap::new();
                params.insert("p".to_string(), p);
                params.insert("epsilon".to_string(), eps);
                rows.push(Row::from_params(
                    "solve".into(),
                    &params,
                    h,
                    bundle.solve_residual.unwrap_or(0.0),
                    0.0,
                    bundle.converged,
                ));
            }
            for spec in &config.functionals {
                for params in expand_params(spec, p, eps, &config.axes)? {
                    let concrete = FunctionalSpec {
                        kind: spec.kind,
                        params: params.clone(),
                        mask_policy: spec.mask_policy,
                    };
                    let results =
                        evaluate(&concrete, &bundle.u, bundle.f.as_ref(), window.as_ref())?;
                    for (label, fv) in results {
                        rows.push(Row::from_params(
                            label,
                            &params,
                            fv.grid_h,
                            fv.value,
                            fv.masked_fraction,
                            bundle.converged,
                        ));
                    }
                }
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }

    // order-stable assembly: sort by group key, then h coarse-to-fine
    rows.sort_by(|a, b| {
        a.group_key()
            .cmp(&b.group_key())
            .then(b.h.partial_cmp(&a.h).unwrap())
    });
    annotate_groups(&mut rows);
    for row in rows.iter_mut() {
        row.admissible = admissible_label(row, &config.exponents);
    }
    Ok(SweepReport { rows })
}

/// Fills refinement ratios and verdicts; rows are already sorted by group
/// and by descending h inside each group.
fn annotate_groups(rows: &mut [Row]) {
    let mut start = 0;
    while start < rows.len() {
        let key = rows[start].group_key();
        let mut end = start + 1;
        while end < rows.len() && rows[end].group_key() == key {
            end += 1;
        }
        for i in start + 1..end {
            let coarse = rows[i - 1].value;
            rows[i].refinement_ratio =
                if coarse == 0.0 { None } else { Some(rows[i].value / coarse) };
        }
        let values: Vec<f64> = rows[start..end].iter().map(|r| r.value.abs()).collect();
        let v = verdict(&values);
        for row in rows[start..end].iter_mut() {
            row.verdict = v.to_string();
        }
        start = end;
    }
}

/// Refinement verdict over values ordered coarse-to-fine.
pub fn verdict(values_coarse_to_fine: &[f64]) -> &'static str {
    if values_coarse_to_fine.len() < 2 {
        return "inconclusive";
    }
    let max = values_coarse_to_fine.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values_coarse_to_fine.iter().cloned().fold(f64::INFINITY, f64::min);
    if max <= 1e-12 {
        return "bounded";
    }
    if min > 0.0 && max / min <= BOUNDED_BAND {
        return "bounded";
    }
    let diverging = values_coarse_to_fine
        .windows(2)
        .all(|w| w[0] > 0.0 && w[1] / w[0] >= DIVERGENT_FACTOR);
    if diverging {
        return "divergent";
    }
    "inconclusive"
}

/// Admissibility annotation from the exponent ledger; empty when the kind
/// has no associated exponent condition or the ledger cannot be built.
fn admissible_label(row: &Row, expo: &ExponentSettings) -> String {
    let label = |ok: bool| if ok { "admissible" } else { "inadmissible" }.to_string();
    let params = ExponentParams {
        p: row.p.unwrap_or(expo.p),
        q: expo.q,
        gamma: row.gamma.unwrap_or(expo.gamma),
        n: expo.n,
        cz_constant: expo.cz,
        f_has_sign: expo.f_has_sign,
    };
    match row.kind.as_str() {
        "third_order" => match (row.alpha, exponents::report(&params)) {
            (Some(alpha), Ok(rep)) => label(rep.alpha_threshold.admits_above(alpha)),
            _ => String::new(),
        },
        "power_field_seminorm" => match (row.k, exponents::report(&params)) {
            (Some(k), Ok(rep)) => {
                let kt = exponents::k_threshold(
                    params.p,
                    rep.alpha_threshold.value,
                    params.f_has_sign,
                );
                label(kt.admits_above(k))
            }
            _ => String::new(),
        },
        kind if kind.starts_with("stress_seminorm") => {
            match (row.alpha_tilde, row.p) {
                (Some(at), Some(p)) => match exponents::stress_window(at, expo.n, expo.cz) {
                    Ok((_, window)) => label(window.contains(p)),
                    Err(_) => label(false),
                },
                _ => String::new(),
            }
        }
        "hessian_energy" => match row.beta {
            Some(beta) => label((0.0..1.0).contains(&beta)),
            None => String::new(),
        },
        "inverse_weight_f" => match (row.p, row.q) {
            (Some(p), Some(q)) => label(dual_weight_warning(p, q).is_none()),
            _ => String::new(),
        },
        "gradient_inverse" => match row.r {
            Some(r) => label(r < 1.0),
            None => String::new(),
        },
        _ => String::new(),
    }
}

/// Maps a resolved functional spec onto its radial-oracle counterpart, when
/// one exists.
pub fn to_radial_kind(
    kind: FunctionalKind,
    params: &BTreeMap<String, f64>,
) -> Option<RadialFunctional> {
    let get = |n: &str| params.get(n).copied();
    Some(match kind {
        FunctionalKind::HessianEnergy => RadialFunctional::HessianEnergy {
            p: get("p")?,
            beta: get("beta")?,
            epsilon: get("epsilon")?,
        },
        FunctionalKind::InverseWeightF => RadialFunctional::InverseWeightF {
            p: get("p")?,
            q_dual: get("q")?,
            epsilon: get("epsilon")?,
        },
        FunctionalKind::GradientInverse => {
            RadialFunctional::GradientInverse { p: get("p")?, r_exp: get("r")? }
        }
        FunctionalKind::ThirdOrder => RadialFunctional::ThirdOrder {
            p: get("p")?,
            alpha: get("alpha")?,
            gamma: get("gamma")?,
            epsilon: get("epsilon")?,
        },
        FunctionalKind::StressSeminorm => RadialFunctional::StressSeminorm {
            p: get("p")?,
            alpha_tilde: get("alpha_tilde")?,
            epsilon: get("epsilon")?,
        },
        FunctionalKind::PowerFieldSeminorm => RadialFunctional::PowerFieldSeminorm {
            k: get("k")?,
            r_exp: get("r")?,
            order: get("order")? as usize,
            epsilon: get("epsilon")?,
        },
        FunctionalKind::LinearizedResidual => return None,
    })
}
