//! Common-support recovery from per-sample compressed linear measurements.
//!
//! n samples in R^d share an unknown support of size k; each sample is seen
//! only through m < k random linear measurements taken with a fresh matrix.
//! This crate implements the closed-form proxy-variance estimator that
//! recovers the support from such data, the concentration diagnostics behind
//! its sufficient sample count, the information-theoretic machinery behind
//! the matching necessary count, and a reproducible Monte Carlo harness for
//! phase-transition experiments.
//!
//! Module map:
//! - [`config`]: problem configuration and derived-stream seeding.
//! - [`datagen`]: supports, variance vectors, signals, matrices, observations.
//! - [`estimator`]: the proxy-variance statistic and support selection.
//! - [`concentration`]: alpha^2 statistics, the separation condition, and the
//!   subexponential toolbox.
//! - [`lowerbound`]: exact Gaussian KL, the eigenvalue inequality chain,
//!   Wishart minimum-eigenvalue moments, and sample-count formulas.
//! - [`harness`]: end-to-end trials, parameter sweeps, Wilson intervals,
//!   axis normalization, CSV/JSON output.

pub mod concentration;
pub mod config;
pub mod datagen;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod linalg;
pub mod lowerbound;

pub use config::{Ensemble, Prior, ProblemConfig};
pub use error::{Error, Result};
