//! Quantum-dynamics toolkit for short-time indirect measurement: recover the
//! expectation of a nested-commutator observable in an unknown initial state
//! from the short-time change of a directly measured observable, calibrated
//! against a known reference state evolving under the same Hamiltonian.
//!
//! The library covers the extended p-photon Rabi, JC, Dicke, and
//! Tavis-Cummings models on a truncated Fock space, the closed-form
//! rotating-wave dynamics for ground-state atoms, atomic state tomography
//! through photon-number readout, and the short-time quantum Fisher
//! information of the coupling.

pub mod cli;
pub mod error;
pub mod evolution;
pub mod hilbert;
pub mod measure;
pub mod models;
pub mod operators;
pub mod policy;
pub mod qfi;

pub use error::{Error, Result};
