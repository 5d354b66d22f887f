//! Semiparametric bivariate extreme-value copulas.
//!
//! Densities on `[0, 1]` are parameterized by zero-integral splines in the
//! centered log-ratio space, mapped to 2-monotone functions by the Williamson
//! transform and rotated into Pickands dependence functions.

pub mod bayes;
pub mod copula;
pub mod error;
pub mod families;
pub mod fit;
pub mod interp;
pub mod pickands;
pub mod pipeline;
pub mod quadrature;
pub mod roots;
pub mod splinebasis;
pub mod williamson;

pub use error::{Error, Result};
