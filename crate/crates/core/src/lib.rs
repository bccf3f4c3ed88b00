//! Analytic engine and particle simulator for a typed branching diffusion.
//!
//! Particles move in space as driftless Brownian motions with variance
//! `a·y²`, carry an Ornstein–Uhlenbeck type `y` with standard-normal
//! invariant law, and split in two at rate `r·y² + ρ`. This crate holds
//! everything that is pure computation:
//!
//! * [`analytics`]: closed-form growth rates, wave speed, ascent costs and
//!   the numeric optimizers that cross-check them;
//! * [`paths`]: optimal ascent paths and the path cost functionals;
//! * [`birthdeath`]: the time-inhomogeneous birth–death model;
//! * [`sim`], [`spine`], [`oracle`]: Monte Carlo under the original
//!   measure, under the spine change of measure, and single-particle
//!   expectation oracles;
//! * [`martingale`]: additive martingales evaluated on snapshots.
//!
//! The crate is `no_std` and only needs `alloc`. IO, file formats, the CLI
//! and replica parallelism live in the `bdlab` companion crate.
#![no_std]
#![warn(missing_debug_implementations)]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod analytics;
pub mod birthdeath;
mod error;
pub mod label;
pub mod martingale;
pub mod optimize;
pub mod oracle;
pub mod params;
pub mod paths;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod spectral;
pub mod spine;
pub mod stats;

pub use error::{Error, Result};
pub use label::Label;
pub use params::ModelParams;
pub use spectral::SpectralQuantities;
pub use stats::EstimatorResult;
