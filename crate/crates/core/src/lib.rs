//! Simulation of multi-mode Schrödinger cat states stabilized in arrays of
//! resonators with non-local (dissipative) coupling.
//!
//! Models are built directly in the plane-wave basis
//! b_k = (1/√N) Σ_j e^{ijk} a_j, where the non-local dissipator is diagonal.
//! Density matrices are flattened by column stacking throughout.

pub mod error;
pub mod fock;
pub mod linalg;
pub mod model;
pub mod states;
pub mod solver;
pub mod superop;
pub mod wigner;

pub use error::{Error, Result};

/// Library version recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
