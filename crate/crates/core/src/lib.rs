//! Control charting for zero-inflated, overdispersed count processes.
//!
//! The crate covers the full monitoring workflow for attribute data whose
//! zero excess and variance rule out the classical Poisson c-chart:
//!
//! * exact distribution math for zero-inflated negative binomial counts
//!   ([`dist`]),
//! * EWMA and Shewhart chart construction ([`chart`]),
//! * run-length Monte Carlo with reproducible parallel streams
//!   ([`runlength`]),
//! * control-limit calibration against a target in-control ARL
//!   ([`calibrate`]),
//! * count-model fitting, model selection, and overdispersion diagnostics
//!   ([`fit`], [`dispersion`]),
//! * two-phase monitoring of observed data and SVG rendering ([`monitor`],
//!   [`plot`]).

pub mod calibrate;
pub mod chart;
pub mod data;
pub mod dispersion;
pub mod dist;
pub mod error;
pub mod fit;
pub mod monitor;
pub mod optim;
pub mod plot;
pub mod runlength;

pub use error::{Error, Result};
