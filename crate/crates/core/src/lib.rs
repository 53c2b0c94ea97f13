//! Nonlinear feature selection for regression built on k-nearest-neighbor
//! estimators of differential entropy and mutual information.
//!
//! The crate is organised bottom-up:
//!
//! - [`neighbors`]: exact K-th neighbor distances and strict-radius counts
//!   under the Chebyshev and Euclidean norms.
//! - [`estimators`]: digamma, the Kozachenko-Leonenko entropy estimator and
//!   the Kraskov mutual-information estimator.
//! - [`dataset`]: the tabular data model, CSV ingestion, standardization,
//!   cross-validation folds, permutations and the Friedman generator.
//! - [`model_selection`]: the t statistic, resampling choice of K and the
//!   permutation stopping test.
//! - [`selection`]: greedy forward and forward-backward subset search.
//! - [`clustering`]: supervised feature clustering from false-neighbor counts.
//!
//! All randomness flows from explicit `u64` seeds and every parallel loop
//! returns results in input order, so outputs do not depend on the thread
//! schedule. Build with `--no-default-features` to drop rayon entirely.

pub mod clustering;
pub mod dataset;
mod error;
pub mod estimators;
pub mod matrix;
pub mod model_selection;
pub mod neighbors;
pub mod par;
pub mod rng;
pub mod selection;
pub mod tvalue;

pub use error::{Error, Result};
pub use matrix::Matrix;
