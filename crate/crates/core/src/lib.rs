//! Grid-based first-quantized simulation of electrons and quantized nuclear
//! geometries, with probabilistic and variational imaginary-time geometry
//! optimization and circuit resource estimates.

pub mod error;
mod fourier;
pub mod hamiltonian;
pub mod potentials;
pub mod pite;
pub mod propagator;
pub mod registers;
pub mod resources;
pub mod vite;

pub use error::{Error, ErrorClass, Result};
pub use hamiltonian::{GridHamiltonian, Operator};
pub use propagator::{CompositeState, TauSchedule};
pub use registers::{CompositeSpace, GeometryGrid, RegisterLayout};
