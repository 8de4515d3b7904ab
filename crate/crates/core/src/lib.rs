//! Numerical toolkit for weighted variance inequalities of Brascamp-Lieb
//! type: measure construction, adaptive quadrature, an inequality scenario
//! catalogue, a 1-D dual (Hormander-style) verifier, and semigroup /
//! spectral-gap machinery, all with explicit error reporting.

pub mod error;
pub mod evolve;
pub mod catalogue;
pub mod dual;
pub mod fields;
pub mod linalg;
pub mod measures;
pub mod quad;

pub use error::{Error, Result};
pub use fields::ScalarField;
pub use linalg::SymMatrix;
pub use quad::{IntegralEstimate, QuadratureSpec};
