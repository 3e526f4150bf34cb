//! Numerical building blocks: special functions, bracketed root finding,
//! adaptive quadrature and order-fixed summation.

pub mod lambert;
pub mod normal;
pub mod quadrature;
pub mod roots;
pub mod summation;

pub use lambert::{lambert_w, LambertBranch};
pub use quadrature::integrate;
pub use roots::brent;
pub use summation::pairwise_sum;
