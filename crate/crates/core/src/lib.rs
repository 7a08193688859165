//! Proximity operators of phi-divergences and the solvers built on them.

pub mod epigraph;
pub mod error;
pub mod linop;
pub mod problems;
pub mod scalar;
mod serde_ext;
pub mod simple_prox;
pub mod solvers;
pub mod vector_prox;

pub use error::{Error, Result};
