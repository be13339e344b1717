//! Behavioral simulation of VCO-based sigma-delta ADCs whose internal state is
//! kept as binary and Gray-coded words with modulo-arithmetic feedback.
//!
//! The crate is organized bottom-up:
//!
//! - [`signal`]: calibrated test stimuli in volts / dBV.
//! - [`oscillator`]: phase-accumulator VCO/DCO models, R-2R DAC, ring-oscillator
//!   tap waveforms.
//! - [`digital`]: bit-accurate loop logic (Gray encoder and extender, Gray/binary
//!   conversion, modulo subtractor, metastable sampler, first difference).
//! - [`modulator`]: the complete second-order loop, its Nth-order generalization,
//!   the textbook CTSDM and nested reference models, analytic NTF/STF and the
//!   symbolic linear model.
//! - [`spectrum`]: averaged periodograms, A-weighting and audio metrics.
//! - [`experiments`]: sweeps and measurement recipes built on the above.
//! - [`harness`]: JSON run configuration and CSV/JSON output used by the
//!   `vcosim` binary.
//!
//! ```
//! use vcosim::modulator::{simulate_proposed, SimConfig};
//! use vcosim::signal::Stimulus;
//!
//! let cfg = SimConfig::default();
//! let trace = simulate_proposed(&cfg, &Stimulus::silence(), 256).unwrap();
//! // At rest each branch advances fe/fs = 42 MHz / 3.072 MHz counts per sample.
//! let mean = trace.branch_p.y[64..].iter().map(|&v| v as f64).sum::<f64>() / 192.0;
//! assert!((mean - 13.671875).abs() < 0.1);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod digital;
pub mod error;
pub mod experiments;
pub mod harness;
pub mod modulator;
pub mod oscillator;
pub mod signal;
pub mod spectrum;

pub use error::{Error, Result};
