//! Transport of shot noise and technical intensity noise through diffusive
//! random media.
//!
//! * [`model`]: closed-form transmission laws and frequency correlations.
//! * [`ensemble`]: circular-Gaussian speckle Monte Carlo used as an oracle.
//! * [`detection`]: virtual spectrum-analyzer measurement and its reduction.
//! * [`inference`]: thickness-series and correlation fits.
//! * [`io`], [`config`], [`verify`]: file formats, run configuration and the
//!   self-verification suite behind the `qnoise` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod config;
pub mod detection;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod io;
pub mod model;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
