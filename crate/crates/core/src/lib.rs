//! Exact decision procedures for sets of uniqueness of the spaces `B^k_q` of
//! low-degree functions on the hypercube `{-1,+1}^k`, and the Ising model
//! tooling built on them.

pub mod cube;
pub mod error;
pub mod exact;
pub mod extremal;
pub mod ising;
pub mod levels;
pub mod uniqueness;
pub mod walsh;

pub use error::{Error, Result};
