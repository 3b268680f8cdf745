//! Formal normalization of neighborhoods of compact submanifolds whose
//! normal bundle is unitary flat.
//!
//! * [`series`]: truncated multivariate power series, composition, reversion
//!   and symmetric-power transition matrices.
//! * [`bundles`]: flat line bundles on a genus-`g` base, Diophantine
//!   classification and the divisor sequence `epsilon_n`.
//! * [`majorant`]: the majorant series bounding normalizing coefficients.
//! * [`cohomology`]: twisted coboundary solvers on nerves and Fourier modes.
//! * [`normalizer`]: the degree-by-degree normalization and obstruction
//!   classes of germ systems.

pub mod bundles;
pub mod cohomology;
pub mod cyclotomic;
pub mod fourier;
pub mod majorant;
pub mod matrix;
pub mod normalizer;
pub mod scalar;
pub mod series;

pub use num_complex::Complex64;
