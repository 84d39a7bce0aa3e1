//! Configuration files, presets and experiment sweeps behind the `ghcp` binary.

pub mod config;
pub mod experiment;
