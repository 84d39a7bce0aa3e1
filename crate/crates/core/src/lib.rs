//! Simulation and analysis of RTS/CTS hard-core point processes for
//! mm-wave WLANs, plus a model of the cross-link (dual-band) RTS/CTS
//! handshake.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: antenna patterns and exclusion regions.
//! * [`pointprocess`]: Poisson bipolar sampling and Type I / Type II thinning.
//! * [`channel`]: path loss, fading, interference and SIR sampling.
//! * [`specfun`]: special functions and quadrature.
//! * [`analysis`]: numerical evaluation of the analytical model.
//! * [`sim`]: Monte Carlo estimators built on the above.
//! * [`protocol`]: control frames and the handshake event simulator.
//! * [`cli`]: configuration files and experiment sweeps.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod pointprocess;
pub mod protocol;
pub mod sim;
pub mod specfun;

pub use error::{Error, Result};
