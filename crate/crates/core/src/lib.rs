//! DSRR: derivatives of block-wise rescaled-range (R/S) curves, applied to flow-based traffic features.
//!
//! The crate is organised around the processing chain used for VPN vs non-VPN
//! characterization:
//!
//! - [`rescaled_range`]: R/S kernel, prefix curves, Hurst fits and the block-wise
//!   DSRR transform.
//! - [`correlation`]: Kendall τ-b, Φ_k and redundant-feature pruning.
//! - [`classifiers`]: kNN, CART and random forest, all seed-deterministic.
//! - [`dataset`]: flow-feature tables, CSV ingestion, stratified split and a
//!   synthetic regime-switch generator.
//! - [`evaluation`]: confusion matrices and precision/recall/F1 reports.
//! - [`pipeline`]: the end-to-end orchestration used by the `dsrr` binary.

pub mod classifiers;
pub mod correlation;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod pipeline;
pub mod rescaled_range;
pub(crate) mod rng;

pub use error::{Error, Result};
