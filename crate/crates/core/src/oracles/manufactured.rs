//! Manufactured Poisson pair for solver verification at p = 2.

use crate::fields::{GridDomain, ScalarField};
use std::f64::consts::PI;

/// Exact pair for `-Delta u = f`: `u = prod_a sin(pi x_a)`,
/// `f = n pi^2 u`. On the unit box the trace of u vanishes.
pub fn manufactured_poisson(domain: &GridDomain) -> (ScalarField, ScalarField) {
    let n = domain.n;
    let u = ScalarField::from_fn(domain.clone(), move |x| {
        (0..n).map(|a| (PI * x[a]).sin()).product()
    });
    let factor = n as f64 * PI * PI;
    let f = ScalarField::new(
        domain.clone(),
        u.values.iter().map(|v| factor * v).collect(),
    )
    .unwrap();
    (u, f)
}
