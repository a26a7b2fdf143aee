//! Gaussian iteration of quasi-arithmetic means in arbitrary precision.
//!
//! The crate is `no_std` (with `alloc`). It provides
//!
//! - [`numerics`]: the [`BigReal`] scalar, adaptive quadrature and bracketed
//!   monotone inversion;
//! - [`generators`]: generator functions `f` with derivatives, inverses,
//!   Arrow-Pratt indexes and class data;
//! - [`means`]: quasi-arithmetic and power means, vector statistics;
//! - [`iteration`]: the map `a -> (QA_f1(a), ..., QA_fn(a))`, its orbits, the
//!   invariant mean and convergence diagnostics;
//! - [`analysis`]: the second-order expansion of a quasi-arithmetic mean, its
//!   remainder bounds, and the variance contraction estimate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod generators;
pub mod iteration;
pub mod means;
pub mod numerics;

pub use error::{Error, Result};
pub use numerics::{BigReal, Interval, QuadratureConfig};
