//! Finite-difference jets: gradient, Hessian, and third-derivative tensor.
//!
//! All derivatives are compositions of a single per-axis operator `D_a`
//! (central in the interior, second-order one-sided at the two end planes).
//! The per-axis operators commute exactly, so the Hessian and the third
//! tensor are symmetric to round-off by construction, and third derivatives
//! inherit second-order accuracy. Nodes within `interior_margin = order` of
//! the boundary carry one-sided values and are flagged for exclusion from
//! default quadrature.

use super::{FieldError, GridDomain, ScalarField};

#[derive(Debug, Clone)]
pub struct JetField {
    pub domain: GridDomain,
    pub order: usize,
    /// `n` entries per node.
    pub grad: Vec<f64>,
    /// `n*n` entries per node (order >= 2), symmetric.
    pub hess: Vec<f64>,
    /// `n*n*n` entries per node (order == 3), symmetric under permutations.
    pub third: Vec<f64>,
    pub grad_norm: Vec<f64>,
    pub hess_norm: Vec<f64>,
    pub third_norm: Vec<f64>,
    /// Stencil width excluded at the boundary.
    pub interior_margin: usize,
    /// True at nodes within `interior_margin` of the boundary.
    pub boundary: Vec<bool>,
}

impl JetField {
    pub fn n(&self) -> usize {
        self.domain.n
    }

    pub fn grad_at(&self, node: usize) -> &[f64] {
        let n = self.n();
        &self.grad[node * n..(node + 1) * n]
    }

    pub fn hess_at(&self, node: usize, i: usize, j: usize) -> f64 {
        let n = self.n();
        self.hess[node * n * n + i * n + j]
    }

    pub fn third_at(&self, node: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.n();
        self.third[node * n * n * n + (i * n + j) * n + k]
    }

    /// Row i of the Hessian, i.e. the gradient of the partial u_i.
    pub fn hess_row(&self, node: usize, i: usize) -> &[f64] {
        let n = self.n();
        let base = node * n * n + i * n;
        &self.hess[base..base + n]
    }

    /// The vector (u_{ij1}, ..., u_{ijn}): gradient of the second partial u_ij.
    pub fn third_row(&self, node: usize, i: usize, j: usize) -> &[f64] {
        let n = self.n();
        let base = node * n * n * n + (i * n + j) * n;
        &self.third[base..base + n]
    }
}

/// One application of the per-axis difference operator `D_axis`.
///
/// Interior: `(v[i+1] - v[i-1]) / 2h`. End planes: second-order one-sided
/// `(-3 v[0] + 4 v[1] - v[2]) / 2h` and its mirror.
/// Per-axis difference operator: 2nd-order central in the interior,
/// 2nd-order one-sided at the two boundary planes.
pub fn apply_d(domain: &GridDomain, values: &[f64], axis: usize) -> Vec<f64> {
    let n_axis = domain.nodes(axis);
    let h = domain.spacing(axis);
    let stride: usize = (0..axis).map(|a| domain.nodes(a)).product();
    let mut out = vec![0.0; values.len()];
    for idx in 0..values.len() {
        let i = (idx / stride) % n_axis;
        let at = |k: usize| values[idx - i * stride + k * stride];
        out[idx] = if i == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
        } else if i == n_axis - 1 {
            (3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) / (2.0 * h)
        } else {
            (at(i + 1) - at(i - 1)) / (2.0 * h)
        };
    }
    out
}

/// Computes the finite-difference jet of `u` up to `order` in {1, 2, 3}.
pub fn jet(u: &ScalarField, order: usize) -> Result<JetField, FieldError> {
    assert!((1..=3).contains(&order), "jet order must be 1, 2, or 3");
    let domain = &u.domain;
    let n = domain.n;
    for a in 0..n {
        if domain.cells[a] < 2 * order {
            return Err(FieldError::GridTooSmall {
                order,
                need: 2 * order,
                axis: a,
                got: domain.cells[a],
            });
        }
    }
    let nodes = domain.node_count();

    // First derivatives.
    let d1: Vec<Vec<f64>> = (0..n).map(|a| apply_d(domain, &u.values, a)).collect();
    let mut grad = vec![0.0; nodes * n];
    for idx in 0..nodes {
        for a in 0..n {
            grad[idx * n + a] = d1[a][idx];
        }
    }

    // Second derivatives: D_b(D_a u) for a <= b, mirrored.
    let mut hess = Vec::new();
    let mut d2: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n]; n];
    if order >= 2 {
        hess = vec![0.0; nodes * n * n];
        for a in 0..n {
            for b in a..n {
                let dab = apply_d(domain, &d1[a], b);
                for idx in 0..nodes {
                    hess[idx * n * n + a * n + b] = dab[idx];
                    hess[idx * n * n + b * n + a] = dab[idx];
                }
                d2[a][b] = dab;
            }
        }
    }

    // Third derivatives: D_c(D_b D_a u) for a <= b <= c, spread to permutations.
    let mut third = Vec::new();
    if order >= 3 {
        third = vec![0.0; nodes * n * n * n];
        for a in 0..n {
            for b in a..n {
                for c in b..n {
                    let dabc = apply_d(domain, &d2[a][b], c);
                    let perms = [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]];
                    for idx in 0..nodes {
                        let v = dabc[idx];
                        for p in perms {
                            third[idx * n * n * n + (p[0] * n + p[1]) * n + p[2]] = v;
                        }
                    }
                }
            }
        }
    }

    let grad_norm: Vec<f64> = (0..nodes)
        .map(|i| grad[i * n..(i + 1) * n].iter().map(|g| g * g).sum::<f64>().sqrt())
        .collect();
    let hess_norm: Vec<f64> = if order >= 2 {
        (0..nodes)
            .map(|i| hess[i * n * n..(i + 1) * n * n].iter().map(|g| g * g).sum::<f64>().sqrt())
            .collect()
    } else {
        Vec::new()
    };
    let nnn = n * n * n;
    let third_norm: Vec<f64> = if order >= 3 {
        (0..nodes)
            .map(|i| third[i * nnn..(i + 1) * nnn].iter().map(|g| g * g).sum::<f64>().sqrt())
            .collect()
    } else {
        Vec::new()
    };

    let margin = order;
    let boundary: Vec<bool> = (0..nodes).map(|i| domain.in_margin(i, margin)).collect();

    Ok(JetField {
        domain: domain.clone(),
        order,
        grad,
        hess,
        third,
        grad_norm,
        hess_norm,
        third_norm,
        interior_margin: margin,
        boundary,
    })
}
