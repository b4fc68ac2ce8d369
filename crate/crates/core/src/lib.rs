//! Unitary-embedding realizations of unambiguous state discrimination
//! (USD) measurements, with their time-energy (norm action) cost.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the command
//! line front end and parallel simulation live in the `usd-embed` crate.

#![no_std]

extern crate alloc;

pub mod atomlaser;
pub mod dynamics;
pub mod embedding;
pub mod error;
pub mod neumark;
pub mod numkernel;
pub mod sample;
pub mod tol;
pub mod usd;

#[cfg(test)]
mod testutil;

/// Float methods on no_std targets; std's inherent methods take precedence
/// when std is linked.
#[allow(unused_imports)]
pub(crate) use num_traits::Float;

pub use error::{Error, Result};
pub use numkernel::{CMatrix, CVector, NormKind, C64};
pub use tol::Tolerances;
