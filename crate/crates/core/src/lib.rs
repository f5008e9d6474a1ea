//! Numerical verification of the interpolating inequality that bounds the
//! boundary oscillation of solutions of `div(A ∇v) = 0` by a product of a
//! scale-invariant Hölder seminorm and a normalized `L^p` norm.

pub mod coefficients;
pub mod geometry;
pub mod harness;
pub mod inequality;
pub mod meanvalue;
pub mod norms;
pub mod quadrature;
pub mod solver;
