//! Laplacians on finite metric graphs with general, possibly non-self-adjoint,
//! vertex conditions.

pub mod boundary;
pub mod classify;
pub mod error;
pub mod evolve;
pub mod graph;
pub mod json;
pub mod matrixcore;
pub mod problem;
pub mod spectral;

pub use error::{Error, Result};
