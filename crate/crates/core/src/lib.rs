//! Sparse random symmetric matrices, the entry-resampling noise process, and
//! the spectral, resolvent and edge-model tools used to measure how the top
//! eigenvector reacts to that noise.

pub mod edge_model;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod io;
pub mod matrix;
pub mod resolvent;
pub mod resample;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use matrix::{Entry, Negated, SparseSymMatrix, SymOperator};
pub use rng::{Role, StreamRng, Streams};

/// Version string written into every output header.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
