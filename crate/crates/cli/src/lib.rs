//! Experiment orchestration for sensitivity pruning and signal-propagation
//! diagnostics: configuration resolution, canonical experiment recipes, run
//! manifests, and result artifacts. The `isoprune` binary is a thin argument
//! parser over this crate.

pub mod commands;
pub mod config;
pub mod dataio;
pub mod error;
pub mod manifest;
pub mod output;
