//! Realism benchmarking for simulated financial return series.
//!
//! The crate fits generators to a panel of real returns, simulates
//! synthetic panels, extracts detector features from fixed-length segments
//! and scores how well a trained classifier separates the two classes
//! (ROC-AUC). An AUC near 0.5 means the simulated data is indistinguishable
//! from the real data for that detector.
//!
//! Everything here is `no_std` + `alloc` and deterministic given a seed.
//! File formats, manifests and the command-line surface live in the
//! companion `realism` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod linalg;
pub mod matrix;
pub mod rng;
pub mod stats;

pub mod dataset;
pub mod series;
pub mod trends;

pub mod eval;
pub mod features;
pub mod generators;
pub mod learn;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use series::{Label, Origin, Panel, PriceSeries, ReturnSeries, Segment};

/// Version of this library, recorded in manifests and model archives.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
