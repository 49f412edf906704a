//! Experiment runner behind the `rdlab` binary.
//!
//! Everything is deterministic for a fixed `(config, seed)`: re-running an
//! experiment writes byte-identical CSVs regardless of the thread count.
//! Each experiment emits a manifest JSON (parameters, derived constants,
//! versions) next to its CSV outputs.

pub mod config;
pub mod experiments;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::run;
