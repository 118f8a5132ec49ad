//! Pólya trees with arbitrary outdegree restrictions: exact enumeration,
//! singularity analysis of the counting series, a colored Boltzmann sampler
//! with exact-size rejection, tree functionals and continuum-random-tree
//! reference laws, and a Monte Carlo experiment harness.

pub mod analysis;
pub mod crt;
pub mod cycle_index;
pub mod degree;
pub mod enumerate;
pub mod laws;
pub mod metrics;
pub mod rng;
pub mod sampler;
pub mod error;
pub mod series;

pub use degree::DegreeSet;
pub use error::{PolyaError, Result};
