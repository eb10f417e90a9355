//! Structured-grid fields: axis-aligned box domains, node-sampled scalar /
//! vector fields, finite-difference jets up to third order, degenerate-set
//! masks, and masked quadrature.

mod field;
mod grid;
mod io;
mod jet;
mod mask;
mod quad;

pub use field::{ScalarField, TensorField, VectorField};
pub use grid::GridDomain;
pub use io::{load_scalar_field, save_scalar_field};
pub use jet::{apply_d, jet, JetField};
pub use mask::{degenerate_mask, default_degenerate_delta, CellMask, DegenerateKind, MaskProvenance};
pub use quad::{integrate, QuadRule, Quadrature};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("value count {got} does not match node count {want}")]
    ValueCount { got: usize, want: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("grid too small for jet order {order}: need >= {need} cells per axis, axis {axis} has {got}")]
    GridTooSmall { order: usize, need: usize, axis: usize, got: usize },
    #[error("degenerate threshold delta = {0} must be > 0")]
    BadDelta(f64),
    #[error("mask length {got} does not match node count {want}")]
    MaskLength { got: usize, want: usize },
    #[error("domain mismatch between fields")]
    DomainMismatch,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad field file: {0}")]
    BadFile(String),
}
