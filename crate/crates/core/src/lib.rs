//! Massive-MIMO channel-state acquisition toolkit.
//!
//! Channel synthesis, FDD/TDD pilot training (with pilot contamination), classical and
//! sparsity-aware estimators, and a seeded Monte-Carlo runner that emits CSV metrics.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod io;
pub mod linalg;
pub mod parallel;
pub mod report;
pub mod rng;
pub mod sparse_recovery;
pub mod training;

pub use error::{CsiError, Result};
