//! Axis-aligned box domain with uniform spacing per axis.

use super::FieldError;
use serde::{Deserialize, Serialize};

/// Box `[origin, origin + extent]` in dimension `n` (1-3), split into
/// `cells` uniform cells per axis. Node values live on the `cells + 1`
/// grid lines per axis, row-major with the x index fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    pub n: usize,
    pub origin: Vec<f64>,
    pub extent: Vec<f64>,
    pub cells: Vec<usize>,
}

impl GridDomain {
    pub fn new(
        n: usize,
        origin: &[f64],
        extent: &[f64],
        cells: &[usize],
    ) -> Result<Self, FieldError> {
        if !(1..=3).contains(&n) {
            return Err(FieldError::InvalidGrid(format!("dimension {n} not in 1..=3")));
        }
        if origin.len() != n || extent.len() != n || cells.len() != n {
            return Err(FieldError::InvalidGrid("axis array lengths must equal n".into()));
        }
        for a in 0..n {
            if cells[a] < 4 {
                return Err(FieldError::InvalidGrid(format!(
                    "axis {a}: {} cells < minimum 4",
                    cells[a]
                )));
            }
            if !(extent[a] > 0.0) || !extent[a].is_finite() {
                return Err(FieldError::InvalidGrid(format!(
                    "axis {a}: extent {} must be positive",
                    extent[a]
                )));
            }
            if !origin[a].is_finite() {
                return Err(FieldError::InvalidGrid(format!("axis {a}: origin not finite")));
            }
        }
        Ok(GridDomain {
            n,
            origin: origin.to_vec(),
            extent: extent.to_vec(),
            cells: cells.to_vec(),
        })
    }

    /// Unit box `[0,1]^n` with `cells` cells per axis.
    pub fn unit_box(n: usize, cells: usize) -> Self {
        GridDomain::new(n, &vec![0.0; n], &vec![1.0; n], &vec![cells; n]).unwrap()
    }

    /// Symmetric box `[-half, half]^n`.
    pub fn centered_box(n: usize, half: f64, cells: usize) -> Self {
        GridDomain::new(n, &vec![-half; n], &vec![2.0 * half; n], &vec![cells; n]).unwrap()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.cells[axis] as f64
    }

    /// Smallest spacing over the axes; the `h` reported with functional values.
    pub fn h_min(&self) -> f64 {
        (0..self.n).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn nodes(&self, axis: usize) -> usize {
        self.cells[axis] + 1
    }

    pub fn node_count(&self) -> usize {
        (0..self.n).map(|a| self.nodes(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.extent.iter().product()
    }

    /// Flat index of the node with per-axis indices `ix` (x fastest).
    pub fn index(&self, ix: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for a in 0..self.n {
            idx += ix[a] * stride;
            stride *= self.nodes(a);
        }
        idx
    }

    /// Per-axis indices of flat node index `idx`.
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let mut c = [0usize; 3];
        let mut rem = idx;
        for a in 0..self.n {
            c[a] = rem % self.nodes(a);
            rem /= self.nodes(a);
        }
        c
    }

    /// Physical position of a node.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for a in 0..self.n {
            x[a] = self.origin[a] + c[a] as f64 * self.spacing(a);
        }
        x
    }

    /// True when the node lies within `margin` of the box boundary on any axis.
    pub fn in_margin(&self, idx: usize, margin: usize) -> bool {
        let c = self.coords(idx);
        (0..self.n).any(|a| c[a] < margin || c[a] + margin >= self.nodes(a))
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.in_margin(idx, 1)
    }
}
