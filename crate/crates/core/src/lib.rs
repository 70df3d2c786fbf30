//! Localization of gamma-ray point sources with small detector arrays.
//!
//! The crate covers the whole chain from a physical scene to a predicted
//! source bearing and range:
//!
//! - [`geometry`]: planar scene description and ray/shape path lengths.
//! - [`transport`]: per-detector counts from a scene (expected value,
//!   Poisson-sampled, or Monte Carlo photon tracing).
//! - [`datasets`]: scenario grids, presets, labels, splits and CSV I/O.
//! - [`scaling`]: raw, unit-norm and robust feature pipelines.
//! - [`reftable`]: the calibrated reference-table baseline.
//! - [`models`]: logistic regression, SVM, kNN, decision tree and MLP
//!   classifiers behind one fit/predict contract.
//! - [`eval`]: angular/distance metrics with confidence intervals.
//! - [`cli`]: the batch front end used by the `radloc` binary.
//!
//! Runnable walkthroughs for each capability live in the crate's
//! `examples/` directory (`cargo run --example <name>`).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod models;
pub mod reftable;
pub mod rng;
pub mod scaling;
pub mod stats;
pub mod transport;

pub use error::{Error, ErrorCategory, Result};
