//! Numerical laboratory for the regularized p-Laplace Dirichlet problem:
//! admissibility exponents, structured-grid fields and jets, a frozen
//! coefficient Picard solver with epsilon-continuation, weighted-integral
//! functionals, and closed-form radial oracles.

pub mod exponents;
pub mod fields;
pub mod functionals;
pub mod oracles;
pub mod solver;
