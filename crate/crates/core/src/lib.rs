//! Single-site two-time correlations and Leggett-Garg functions of
//! spin-1/2 chains, and the tooling to locate quantum phase transitions
//! from them.
//!
//! Ground states come from exact diagonalization (up to 14 sites) or
//! two-site DMRG; real-time evolution from exact propagation or TEBD.

pub mod correlator;
pub mod ed;
pub mod error;
pub mod model;
pub mod mps;
pub mod output;
pub mod scan;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
