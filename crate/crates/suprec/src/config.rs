//! Problem configuration and deterministic random-stream derivation.
//!
//! Every random object in a trial (support, variance vector, signals,
//! measurement matrices, noise) draws from its own stream whose seed is a
//! splitmix-style hash of `(master_seed, trial_index, stream_tag)`. Streams
//! are derived, never shared, so distinct trials can run concurrently in any
//! order and still reproduce bit-for-bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of the nonzero signal coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prior {
    /// Coordinate j on the support is N(0, lambda_j).
    Gaussian,
    /// Coordinate j on the support is +/- sqrt(lambda_j) with equal probability.
    Rademacher,
}

impl Prior {
    pub fn as_str(&self) -> &'static str {
        match self {
            Prior::Gaussian => "gaussian",
            Prior::Rademacher => "rademacher",
        }
    }
}

/// Distribution of the measurement-matrix entries; both choices have entry
/// variance exactly 1/m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// Entries are N(0, 1/m); fourth moment 3/m^2.
    Gaussian,
    /// Entries are +/- 1/sqrt(m) with equal probability; fourth moment 1/m^2.
    Rademacher,
}

impl Ensemble {
    pub fn as_str(&self) -> &'static str {
        match self {
            Ensemble::Gaussian => "gaussian",
            Ensemble::Rademacher => "rademacher",
        }
    }
}

/// Full generative-model description for one problem instance.
///
/// Serializes to/from a JSON object with exactly these field names; unknown
/// fields are rejected. `master_seed` may be omitted (defaults to 0) so a
/// caller can inject a seed from the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Ambient dimension.
    pub d: usize,
    /// Common support size, 1 <= k <= d.
    pub k: usize,
    /// Measurements per sample.
    pub m: usize,
    /// Number of samples.
    pub n: usize,
    /// Measurement-noise variance (>= 0).
    pub sigma2: f64,
    pub prior: Prior,
    pub ensemble: Ensemble,
    /// Smallest on-support variance; 1 for the binary case.
    pub lambda_min: f64,
    /// Largest on-support variance; 1 for the binary case.
    pub lambda_max: f64,
    #[serde(default)]
    pub master_seed: u64,
}

impl ProblemConfig {
    /// Checks the hard invariants: 1 <= k <= d, m >= 1, n >= 1, sigma2 >= 0,
    /// 0 < lambda_min <= lambda_max.
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.k > self.d {
            return Err(Error::InvalidConfig(format!(
                "support size k={} must satisfy 1 <= k <= d={}",
                self.k, self.d
            )));
        }
        if self.m < 1 {
            return Err(Error::InvalidConfig("m must be >= 1".into()));
        }
        if self.n < 1 {
            return Err(Error::InvalidConfig("n must be >= 1".into()));
        }
        if !(self.sigma2 >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma2={} must be >= 0",
                self.sigma2
            )));
        }
        if !(self.lambda_min > 0.0 && self.lambda_min <= self.lambda_max) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < lambda_min <= lambda_max, got [{}, {}]",
                self.lambda_min, self.lambda_max
            )));
        }
        if !self.lambda_max.is_finite() {
            return Err(Error::InvalidConfig("lambda_max must be finite".into()));
        }
        Ok(())
    }

    /// Soft regime checks. Violations do not prevent generation; they are
    /// surfaced so the caller can print them.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let ratio = self.lambda_min / self.lambda_max;
        let feasibility = self.k as f64 / (self.k + self.m - 1) as f64;
        if ratio <= feasibility {
            out.push(format!(
                "lambda_min/lambda_max = {:.4} does not exceed k/(k+m-1) = {:.4}; \
                 the threshold estimator's separation guarantee does not apply",
                ratio, feasibility
            ));
        }
        let logk2 = (self.k as f64).ln().powi(2);
        if (self.m as f64) < logk2 {
            out.push(format!(
                "m = {} is below (log k)^2 = {:.2}; the sufficient-sample bound is \
                 proved only above it (the scaling is still expected to hold)",
                self.m, logk2
            ));
        }
        out
    }

    /// True when the variance vector is the 0/1 indicator of the support.
    pub fn is_binary(&self) -> bool {
        self.lambda_min == 1.0 && self.lambda_max == 1.0
    }
}

/// Tags naming the independent random streams of one trial.
pub mod stream_tag {
    pub const SUPPORT: u64 = 0x53_55_50_50; // "SUPP"
    pub const LAMBDA: u64 = 0x4c_41_4d_42; // "LAMB"
    pub const SIGNALS: u64 = 0x53_49_47_4e; // "SIGN"
    pub const MATRICES: u64 = 0x4d_41_54_52; // "MATR"
    pub const NOISE: u64 = 0x4e_4f_49_53; // "NOIS"
    pub const MONTE_CARLO: u64 = 0x4d_43_4d_43; // "MCMC"
    pub const GRID_POINT: u64 = 0x47_52_49_44; // "GRID"
}

/// SplitMix64 finalizer; full-avalanche 64-bit mix.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `(trial_index, tag)` stream under `master_seed`.
pub fn derive_seed(master_seed: u64, trial_index: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ trial_index) ^ tag)
}

/// Deterministic random stream for one object of one trial.
pub fn stream(master_seed: u64, trial_index: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master_seed, trial_index, tag))
}
