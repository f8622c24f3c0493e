//! Benjamin–Ono spectral laboratory: Lax operator, gauge transform, conserved
//! quantities, commuting flows, explicit formula and virial identities.

// Numerical kernels: NaN-rejecting `!(x > 0.0)` guards and index loops are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod check;
pub mod cli;
pub mod conserved;
pub mod error;
pub mod explicit_virial;
pub mod flows;
pub mod lax_gauge;
pub mod spectral;

pub use check::Check;
pub use error::{Error, Result};
