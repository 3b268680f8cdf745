//! Multivariate truncated power series over a coefficient ring.
//!
//! Monomials are enumerated degree by degree and, within a degree, in
//! lexicographic order with larger leading exponents first. Composition,
//! reversion of tangent-to-identity maps and symmetric-power transition
//! matrices are provided here.

mod basis;
mod json;
mod symmetric;
mod truncated;

pub use basis::{shell, shell_size, MonomialBasis, MultiIndex};
pub use json::{JsonCoeff, SeriesJson, TermJson};
pub use symmetric::{symmetric_power, symmetric_transition, SymPowerTransition, UNITARY_TOL};
pub use truncated::TruncatedSeries;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum SeriesError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty component list")]
    Empty,
    #[error("inner series has a nonzero constant term")]
    NonzeroConstant,
    #[error("linear part is not the identity")]
    NonIdentityLinearPart,
    #[error("transition matrix is not unitary (|T*T - I| = {0:e})")]
    NotUnitary(f64),
    #[error("constant term is not invertible")]
    NotInvertible,
    #[error("invalid series data: {0}")]
    Invalid(String),
}
