//! Masked quadrature over grid nodes with compensated summation.

use super::{CellMask, FieldError, GridDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadRule {
    /// Every node weighted by the full cell volume `h^n`. Natural for interior
    /// integrals where the boundary band is masked anyway.
    Midpoint,
    /// Tensor-product trapezoid: half weight on boundary planes; exact for
    /// per-axis linear integrands.
    Trapezoid,
}

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    /// Number of nodes that contributed.
    pub used_nodes: usize,
    /// Set when every node was masked (value is then 0).
    pub all_masked: bool,
}

/// Sum of `w_i v_i` over unmasked nodes in row-major order, Kahan-compensated.
/// Weights of masked nodes are simply omitted; no measure renormalization.
pub fn integrate(
    domain: &GridDomain,
    values: &[f64],
    mask: Option<&CellMask>,
    rule: QuadRule,
) -> Result<Quadrature, FieldError> {
    let nodes = domain.node_count();
    if values.len() != nodes {
        return Err(FieldError::ValueCount { got: values.len(), want: nodes });
    }
    if let Some(m) = mask {
        if m.flags.len() != nodes {
            return Err(FieldError::MaskLength { got: m.flags.len(), want: nodes });
        }
    }
    let cell: f64 = (0..domain.n).map(|a| domain.spacing(a)).product();

    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut used = 0usize;
    for idx in 0..nodes {
        if mask.map_or(false, |m| m.flags[idx]) {
            continue;
        }
        let w = match rule {
            QuadRule::Midpoint => cell,
            QuadRule::Trapezoid => {
                let c = domain.coords(idx);
                let mut w = cell;
                for a in 0..domain.n {
                    if c[a] == 0 || c[a] == domain.cells[a] {
                        w *= 0.5;
                    }
                }
                w
            }
        };
        used += 1;
        // Kahan
        let y = w * values[idx] - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(Quadrature { value: sum, used_nodes: used, all_masked: used == 0 })
}

#[cfg(test)]
mod tests {
    use super::super::{MaskProvenance, ScalarField};
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_one_trapezoid_unit_square() {
        let g = GridDomain::unit_box(2, 16);
        let u = ScalarField::from_fn(g.clone(), |_| 1.0);
        let q = integrate(&g, &u.values, None, QuadRule::Trapezoid).unwrap();
        assert_abs_diff_eq!(q.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_trapezoid_exact() {
        let g = GridDomain::unit_box(1, 64);
        let u = ScalarField::from_fn(g.clone(), |x| x[0]);
        let q = integrate(&g, &u.values, None, QuadRule::Trapezoid).unwrap();
        assert_abs_diff_eq!(q.value, 0.5, epsilon = 1e-13);
    }

    #[test]
    fn all_masked_warns() {
        let g = GridDomain::unit_box(2, 8);
        let u = ScalarField::from_fn(g.clone(), |_| 3.0);
        let mut m = CellMask::empty(&g, MaskProvenance::User);
        m.flags.iter_mut().for_each(|f| *f = true);
        let q = integrate(&g, &u.values, Some(&m), QuadRule::Midpoint).unwrap();
        assert!(q.all_masked);
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn sqrt_singularity_converges_on_disk() {
        // integral of r^{1/2} over the unit disk = 2*pi/2.5 = 4*pi/5
        use std::f64::consts::PI;
        let exact = 4.0 * PI / 5.0;
        let value_at = |cells: usize| {
            let g = GridDomain::centered_box(2, 1.0, cells);
            let u = ScalarField::from_fn(g.clone(), |x| {
                (x[0] * x[0] + x[1] * x[1]).sqrt().sqrt()
            });
            let m = CellMask::window(&g, |x| x[0] * x[0] + x[1] * x[1] <= 1.0);
            integrate(&g, &u.values, Some(&m), QuadRule::Midpoint).unwrap().value
        };
        let v = value_at(256);
        assert!(
            (v - exact).abs() / exact < 0.01,
            "disk quadrature {v} vs exact {exact}"
        );
    }

    #[test]
    fn linearity_and_positivity() {
        let g = GridDomain::unit_box(2, 12);
        let u = ScalarField::from_fn(g.clone(), |x| x[0] * x[1] + 0.3);
        let v = ScalarField::from_fn(g.clone(), |x| (x[0] * 5.0).sin().abs());
        let qu = integrate(&g, &u.values, None, QuadRule::Midpoint).unwrap().value;
        let qv = integrate(&g, &v.values, None, QuadRule::Midpoint).unwrap().value;
        let combo: Vec<f64> =
            u.values.iter().zip(&v.values).map(|(a, b)| 2.0 * a + 3.0 * b).collect();
        let qc = integrate(&g, &combo, None, QuadRule::Midpoint).unwrap().value;
        assert_abs_diff_eq!(qc, 2.0 * qu + 3.0 * qv, epsilon = 1e-12);
        assert!(qv >= 0.0);
    }
}
