//! Simulation and exact Haar calculus for quantum lab-oracle access models.

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod perm;
pub mod sampling;
pub mod protocols;
pub mod qualm;
pub mod weingarten;

pub use error::{Error, Result};
