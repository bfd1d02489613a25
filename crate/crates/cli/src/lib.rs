//! Config-driven experiment pipelines over the solver library.
//!
//! Each pipeline is a pure function of its options: it runs the named
//! experiment, writes headed CSV files into the output directory, and
//! finishes with a manifest listing every file with its size and content
//! hash. Identical options and seed produce byte-identical outputs.

pub mod bernoulli;
pub mod config;
pub mod manifest;
pub mod pipelines;

pub use config::FileConfig;
pub use manifest::Manifest;
