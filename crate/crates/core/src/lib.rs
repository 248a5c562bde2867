//! Exact Fano-type diagonalization of a harmonic oscillator coupled to a bosonic bath.
//!
//! The crate covers the rotating-wave and the full coordinate-coordinate couplings, their
//! time evolution, and two independent checks: exact diagonalization of a discretized bath
//! and a classical ensemble simulation of the same Hamiltonian.

pub mod classical_bath;
pub mod discrete_oracle;
pub mod dynamics;
pub mod error;
pub mod full_diag;
pub mod pv;
pub mod quad;
pub mod rwa_diag;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{BathSpectrum, Cutoff, ModelParams, SpectrumKind};
