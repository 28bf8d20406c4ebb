//! Simulation of BB84-based verification, restricted quantum randomized
//! encodings, the no-cloning bounds for classical encodings and blind
//! computing with a server-side output.
//!
//! All states are dense. Qubit 0 is the most significant bit of a basis index.
// Frozen reference values are written as decimals on purpose.
#![allow(clippy::approx_constant)]

pub mod blind;
pub mod error;
pub mod hamiltonian;
pub mod harness;
pub mod nocloning;
pub mod qcore;
pub mod qre;
pub mod verify;

pub use error::{Error, Result};
pub use qcore::{Channel, ComplexMatrix, DensityMatrix, Povm, PureState, C64};
