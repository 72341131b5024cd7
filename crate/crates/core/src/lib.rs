//! Decay-conditioned photon-number walks of a driven, decaying qubit coupled
//! to one or two resonator modes.

pub mod analytic;
pub mod error;
pub mod integrator;
pub mod model;
pub mod sweep;

pub use error::{Error, Result};
