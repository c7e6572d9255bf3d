//! Dataset entropy analysis and entropy-bounded CNN architecture planning.
//!
//! The pipeline measures the Shannon entropy of an image dataset
//! ([`entropy`]), turns it into a block count for ResNet, DenseNet or
//! ResNeXt ([`planner`]), builds the resulting layer graph and counts its
//! trainable parameters ([`arch`]), and checks accuracy parity of the planned
//! model against a deeper baseline with a small residual trainer
//! ([`trainer`]) and paired significance tests ([`stats`]).

pub mod arch;
pub mod cli;
pub mod dataset;
pub mod entropy;
pub mod error;
pub mod planner;
pub mod report;
pub mod stats;
pub mod trainer;

pub use error::{Error, Result};

/// Version tag written into every JSON document this crate emits.
pub const SCHEMA_VERSION: u32 = 1;
