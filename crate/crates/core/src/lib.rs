//! Particle creation from vacuum in a one-dimensional cavity with a
//! vibrating mirror (dynamical Casimir effect).
//!
//! The field inside `[0, l(t)]` is expanded in instantaneous Dirichlet modes.
//! Each mode pair `(ξ_k^{(m)}, η_k^{(m)})` obeys a linear first-order system
//! that is truncated at a cut-off `k_max`, integrated from the vacuum, and
//! turned into particle spectra by a Bogoliubov transformation.

pub mod analysis;
pub mod cavity;
pub mod commands;
pub mod config;
pub mod coupling;
pub mod error;
pub mod evolve;
pub mod integrator;
pub mod observables;
pub mod oracles;
pub mod record;

pub use error::{Error, Result};
