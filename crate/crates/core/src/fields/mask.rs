//! Node masks for degenerate sets, boundary margins, and user windows.

use super::{FieldError, GridDomain, JetField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskProvenance {
    DegenerateGradient,
    DegenerateHessian,
    BoundaryMargin,
    User,
}

/// Per-node exclusion mask. `true` means the node is excluded.
#[derive(Debug, Clone)]
pub struct CellMask {
    pub flags: Vec<bool>,
    pub provenance: MaskProvenance,
}

impl CellMask {
    pub fn empty(domain: &GridDomain, provenance: MaskProvenance) -> Self {
        CellMask { flags: vec![false; domain.node_count()], provenance }
    }

    pub fn boundary_margin(domain: &GridDomain, margin: usize) -> Self {
        CellMask {
            flags: (0..domain.node_count()).map(|i| domain.in_margin(i, margin)).collect(),
            provenance: MaskProvenance::BoundaryMargin,
        }
    }

    /// User window from a predicate on node positions; nodes where the
    /// predicate is false are excluded.
    pub fn window(domain: &GridDomain, inside: impl Fn(&[f64; 3]) -> bool) -> Self {
        CellMask {
            flags: (0..domain.node_count()).map(|i| !inside(&domain.position(i))).collect(),
            provenance: MaskProvenance::User,
        }
    }

    /// Annulus window `r0 <= |x - center| <= r1` (nodes outside are excluded).
    pub fn annulus(domain: &GridDomain, center: &[f64; 3], r0: f64, r1: f64) -> Self {
        let n = domain.n;
        Self::window(domain, |x| {
            let r2: f64 = (0..n).map(|a| (x[a] - center[a]).powi(2)).sum();
            let r = r2.sqrt();
            (r0..=r1).contains(&r)
        })
    }

    pub fn excluded_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Union of exclusions; keeps this mask's provenance.
    pub fn union(&self, other: &CellMask) -> Result<CellMask, FieldError> {
        if self.flags.len() != other.flags.len() {
            return Err(FieldError::MaskLength { got: other.flags.len(), want: self.flags.len() });
        }
        Ok(CellMask {
            flags: self.flags.iter().zip(&other.flags).map(|(a, b)| *a || *b).collect(),
            provenance: self.provenance,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenerateKind {
    Gradient,
    Hessian,
}

/// Flags nodes where the selected jet norm falls below `delta`.
pub fn degenerate_mask(
    jet: &JetField,
    which: DegenerateKind,
    delta: f64,
) -> Result<CellMask, FieldError> {
    if !(delta > 0.0) {
        return Err(FieldError::BadDelta(delta));
    }
    let (norms, provenance) = match which {
        DegenerateKind::Gradient => (&jet.grad_norm, MaskProvenance::DegenerateGradient),
        DegenerateKind::Hessian => (&jet.hess_norm, MaskProvenance::DegenerateHessian),
    };
    assert!(!norms.is_empty(), "jet order too low for requested degenerate mask");
    Ok(CellMask { flags: norms.iter().map(|&v| v < delta).collect(), provenance })
}

/// Default degenerate threshold: `max(h^2, 1e-10)` scaled by the median
/// gradient norm, so the masked set shrinks under refinement.
pub fn default_degenerate_delta(jet: &JetField) -> f64 {
    let h = jet.domain.h_min();
    let mut sorted = jet.grad_norm.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    (h * h).max(1e-10) * median.max(1e-300)
}
