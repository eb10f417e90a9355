//! Node-sampled scalar, vector, and tensor fields over a [`GridDomain`].

use super::{FieldError, GridDomain};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub domain: GridDomain,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: GridDomain, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != domain.node_count() {
            return Err(FieldError::ValueCount { got: values.len(), want: domain.node_count() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(i));
        }
        Ok(ScalarField { domain, values })
    }

    pub fn zeros(domain: GridDomain) -> Self {
        let n = domain.node_count();
        ScalarField { domain, values: vec![0.0; n] }
    }

    /// Samples `f(x)` at every node.
    pub fn from_fn(domain: GridDomain, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let values = (0..domain.node_count()).map(|i| f(&domain.position(i))).collect();
        ScalarField { domain, values }
    }

    pub fn at(&self, ix: &[usize]) -> f64 {
        self.values[self.domain.index(ix)]
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `n` components per node, component index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub domain: GridDomain,
    pub comps: Vec<f64>,
}

impl VectorField {
    pub fn zeros(domain: GridDomain) -> Self {
        let len = domain.node_count() * domain.n;
        VectorField { domain, comps: vec![0.0; len] }
    }

    pub fn at(&self, node: usize) -> &[f64] {
        let n = self.domain.n;
        &self.comps[node * n..(node + 1) * n]
    }

    pub fn set(&mut self, node: usize, v: &[f64]) {
        let n = self.domain.n;
        self.comps[node * n..(node + 1) * n].copy_from_slice(v);
    }

    pub fn norm_at(&self, node: usize) -> f64 {
        self.at(node).iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Extracts one component as a scalar field.
    pub fn component(&self, c: usize) -> ScalarField {
        let n = self.domain.n;
        let values = (0..self.domain.node_count()).map(|i| self.comps[i * n + c]).collect();
        ScalarField { domain: self.domain.clone(), values }
    }
}

/// `n * n` entries per node, row-major within the node.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub domain: GridDomain,
    pub comps: Vec<f64>,
}

impl TensorField {
    pub fn zeros(domain: GridDomain) -> Self {
        let len = domain.node_count() * domain.n * domain.n;
        TensorField { domain, comps: vec![0.0; len] }
    }

    pub fn at(&self, node: usize, i: usize, j: usize) -> f64 {
        let n = self.domain.n;
        self.comps[node * n * n + i * n + j]
    }

    pub fn set(&mut self, node: usize, i: usize, j: usize, v: f64) {
        let n = self.domain.n;
        self.comps[node * n * n + i * n + j] = v;
    }

    pub fn frobenius_at(&self, node: usize) -> f64 {
        let n = self.domain.n;
        self.comps[node * n * n..(node + 1) * n * n]
            .iter()
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt()
    }
}
