//! Odd-order Pais-Uhlenbeck oscillators: spectrum identities, exact and
//! stepped dynamics, the Dirac and alternative Poisson structures, canonical
//! coordinates, and interacting deformations that keep the alternative
//! Hamiltonians conserved.

pub mod canonical;
pub mod cli;
pub mod deformation;
pub mod dynamics;
pub mod error;
pub mod poisson;
mod precise;
pub mod spectrum;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use spectrum::FrequencySpectrum;
