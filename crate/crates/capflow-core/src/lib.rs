//! Capacity, mass and level-set functionals of spherically symmetric,
//! asymptotically flat 3-manifolds with boundary.
//!
//! Metrics are written in area-radius gauge, so every quantity reduces to
//! one-dimensional integrals of the mass profile m(ρ). The only numerical
//! error source is quadrature, and every returned number carries an error
//! estimate.

// `!(x > 0.0)` is used on purpose so that NaN fails; quadrature nodes keep
// their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod conformal;
pub mod error;
pub mod extrap;
pub mod functionals;
pub mod inequalities;
pub mod metric;
pub mod pchip;
pub mod potential;
pub mod quad;
pub mod roots;

pub use error::{Error, Result};
pub use metric::{Decay, MassProfile};
pub use potential::Potential;
pub use quad::{Estimate, QuadratureSpec};
