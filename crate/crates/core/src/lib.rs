//! Statistical toolkit for ensembles of spin-active optical emitters.
//!
//! The crate is organised around the questions one asks about a sample of
//! colour centres whose optical lines are spread by their local environment:
//!
//! - [`spectral`]: emitter line records, the parametric ensemble model and
//!   reproducible sampling of emitter populations.
//! - [`overlap`]: pair-overlap probability curves, zero-intercept slope fits,
//!   bootstrap errors and birthday-style collision thresholds.
//! - [`ple`]: synthesis and multi-Lorentzian fitting of photoluminescence
//!   excitation scans, plus the three-peak pair classification.
//! - [`register`]: exact state-vector simulation of photon-heralded GHZ
//!   generation, including detector loss as weighted branches.
//! - [`spatial`]: Poisson emitter placement, confocal spot occupancy and the
//!   rate of spectral overlap chains among co-located emitters.
//! - [`io`]: line-list CSV, spectrum CSV and run configuration formats.
//!
//! All frequencies are detunings in GHz from [`spectral::REFERENCE_FREQUENCY_THZ`]
//! unless a name says otherwise (`_mhz`).

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod overlap;
pub mod ple;
pub mod register;
pub mod rng;
pub mod spatial;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use rng::SeedSpec;
