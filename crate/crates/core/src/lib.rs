//! Steady-state Casimir pressure between two dissipative half-spaces held at
//! different temperatures, built from a microscopic oscillator-plus-bath
//! model of the plates, together with tools that check the analytic
//! structure of the underlying Laplace-domain integrands.

pub mod em_green;
pub mod pressure;
pub mod spectral;
pub mod error;
pub mod material;
pub mod quad;

pub use error::{Error, Result};
