//! File formats: emitter line lists, PLE spectra and run configuration.
//!
//! Frequencies in every file are GHz detunings from
//! [`crate::spectral::REFERENCE_FREQUENCY_THZ`], never absolute THz.
//! CSV readers skip lines starting with `#`, which writers use for
//! provenance (tool version, config hash, seed).

pub mod config;
pub mod linelist;
pub mod spectrum;

pub use config::RunConfig;
pub use linelist::{parse_line_list, write_line_list, LineListRecord};
pub use spectrum::{read_spectrum, write_spectrum, SpectrumSidecar};
