//! Fisher-information lower bounds on the uncertainty of two-qubit
//! Hamiltonian parameter estimates under local dephasing.
//!
//! The crate models a pair of qubits evolving under one of five Hamiltonian
//! variants with independent dephasing on each qubit, computes classical and
//! quantum Fisher information for a chosen probe/measurement pair, converts
//! them into a shot-noise-style uncertainty bound for a fixed total
//! interrogation budget, and searches probe states, measurement settings and
//! evolution times for the tightest bound.

pub mod analytics;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod model;
pub mod optimize;
pub mod par;

pub use error::{Error, Result};
