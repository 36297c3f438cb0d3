//! Teleportation power of bipartite quantum states.
//!
//! The crate computes fully entangled fractions and teleportation
//! fidelities, applies and optimizes local filters that can reveal hidden
//! teleportation power, and simulates a photonic teleportation experiment
//! through to process tomography.

pub mod dataset;
pub mod error;
pub mod families;
pub mod fef;
pub mod filter;
pub mod htp;
pub mod optics;
pub mod optim;
pub mod qmat;
pub mod rng;
pub mod teleport;

pub use error::{Error, Result};
