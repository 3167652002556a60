//! Simulation and optimal control of Stark-chirped rapid adiabatic passage
//! (SCRAP) in a two-level system.
//!
//! The crate covers four layers:
//!
//! - [`model`]: pointwise physics of the driven two-level system (Gaussian
//!   pulse pair, adiabatic basis, Bloch generator, adiabaticity diagnostic);
//! - [`dynamics`]: adaptive integration of the Bloch and state--costate
//!   systems with conservation monitoring;
//! - [`landscape`], [`pmp`], [`inhom`], [`geophase`]: pulse-parameter
//!   efficiency maps, Pontryagin extremals with a shooting solver, robustness
//!   under spatial/temporal field inhomogeneity, and geometric phases along
//!   control paths;
//! - [`cli`]: a scenario runner exposing each computation as a reproducible
//!   `scrap` subcommand with JSON configs and CSV outputs.
//!
//! Every capability also has a runnable example under `examples/`.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod geophase;
pub mod inhom;
pub mod landscape;
pub mod model;
pub mod pmp;

pub use error::{Error, Result};
pub use model::{
    AdiabaticFrame, BlochVector, ControlDerivatives, ControlSample, PulseParams, ReducedCoords,
};
