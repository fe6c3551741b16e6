//! Quantum expectation values for semiclassical Gaussian states from the
//! corrected spectrogram density `μ = (1 + d/2) H - ½ Σ_j S^{φ_j}`.

pub mod densities;
pub mod error;
pub mod experiments;
pub mod observables;
pub mod phase;
pub mod quadrature;
pub mod sampling;
pub mod state;

#[cfg(test)]
mod testing;

pub use error::{Error, Result};
