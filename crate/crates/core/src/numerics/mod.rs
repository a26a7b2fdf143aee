//! Precision backend, adaptive quadrature and guarded monotone root finding.

mod bigreal;
mod interval;
mod quadrature;
mod root;

pub use bigreal::{sum, BigReal, DEFAULT_PRECISION, MIN_PRECISION};
pub use interval::Interval;
pub use quadrature::{integrate, QuadratureConfig};
pub use root::{invert_monotone, invert_monotone_with, RootConfig};
