//! Closed-form reference solutions and independent oracles.
//!
//! Nothing in here touches the grid difference stencils: samplers are
//! analytic and the reference integrals are 1-D radial quadratures, so these
//! values are independent checks on the fields/functionals pipeline.

mod cz;
mod manufactured;
mod quad1d;
mod radial;

pub use cz::{cz_constant, cz_ratio_on_grid, CzEstimate, CzMode};
pub use manufactured::manufactured_poisson;
pub use quad1d::adaptive_simpson;
pub use radial::{
    radial_functional_exact, RadialFunctional, RadialSolution, RadialValue,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("C(n,q) is only known exactly at q = 2 (got q = {0}); use estimate mode or a manual override")]
    UnknownCzConstant(f64),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}
