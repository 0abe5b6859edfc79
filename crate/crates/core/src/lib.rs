//! Simulated quantum annealing (path-integral Monte Carlo with time-dependent
//! couplings) of the one-dimensional ferromagnetic transverse-field Ising
//! chain, optionally coupled to an Ohmic bath, together with the defect
//! statistics machinery used to compare the outcome against Kibble-Zurek
//! scaling.
//!
//! Sites and Trotter slices are 0-based throughout the library. Every file
//! written by [`runner`] uses 1-based replica and slice indices.
//!
//! Module map:
//! - [`pimc`]: spin storage, annealing schedule, bath kernel and the
//!   effective classical energy (exact and incremental).
//! - [`anneal`]: single-flip Metropolis dynamics driven by the schedule.
//! - [`observables`]: kink counts, residual energy, histograms.
//! - [`analysis`]: cumulants, Gaussian/Boltzmann models, L1 distance, fits.
//! - [`oracle`]: brute-force Boltzmann enumeration for small lattices.
//! - [`runner`]: experiment specs, replica farm-out, CSV/JSON persistence.

pub mod analysis;
pub mod anneal;
pub mod error;
pub mod observables;
pub mod oracle;
pub mod pimc;
pub mod rng;
pub mod runner;

pub use error::{Error, Result};
