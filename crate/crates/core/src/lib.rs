//! Orbital-angular-momentum spectra of entangled photon pairs measured by
//! detectors moving at relativistic speed, and recovery of the Lorentz factor
//! from the broadening of those spectra.
//!
//! - [`relativity`]: Lorentz kinematics and the contracted azimuth map.
//! - [`spectrum`]: closed-form joint/conditional spectra, mode counts,
//!   moments, and quadrature oracles.
//! - [`hologram`]: contracted OAM projection phase fields.
//! - [`simulate`]: seeded Poisson coincidence-count spectra.
//! - [`estimate`]: Lorentz-factor recovery by measurement sum and
//!   least-squares fit.
//! - [`cli`]: the `lorentz-oam` command-line front end.

pub mod cli;
pub mod error;
pub mod estimate;
pub mod exec;
pub mod experiment;
pub mod hologram;
pub mod numfmt;
pub mod relativity;
pub mod simulate;
pub mod spectrum;

pub use error::{Error, Result};
pub use exec::Exec;
