//! Coupled lattice Boltzmann solver for Biot's consolidation model of
//! linear poroelasticity in two dimensions.
//!
//! The pressure is advanced with a D2Q9 single-relaxation-time scheme and the
//! displacement with a D2Q8 moment scheme that is iterated in pseudo time
//! inside every physical time step.

pub mod boundary;
pub mod coupling;
pub mod driver;
pub mod elasticity;
pub mod error;
mod exec;
pub mod field;
pub mod flow;
pub mod lattice;
pub mod output;
pub mod problems;

pub use error::{Error, Result};
pub use exec::{Parallelism, AUTO_PARALLEL_MIN_CELLS};
