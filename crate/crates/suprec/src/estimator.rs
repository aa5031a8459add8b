//! The closed-form support estimator.
//!
//! The statistic is the proxy variance
//!
//!   lambda_tilde[i] = (1/n) * sum_j (phi_ji . y_j)^2,
//!
//! the diagonal of the proxy covariance (1/n) sum_j Phi_j^T y_j y_j^T Phi_j,
//! where phi_ji is column i of Phi_j. Its expectation is
//!
//!   ((m+1)/m) * lambda_i + Tr(K_lambda)/m + sigma2
//!
//! (Tr(K_lambda) = k in the binary case): an affine function of lambda_i with
//! a bias common to all coordinates, so sorting or thresholding
//! lambda_tilde recovers the support ordering. The support estimate is
//! either the top-k set or a thresholded set; whenever the thresholded set
//! is exactly the true support, the top-k set is too.

use serde::{Deserialize, Serialize};

use crate::datagen::{ObservationBatch, SupportSet, VarianceVector};
use crate::error::{Error, Result};
use crate::linalg::dot;

/// The statistic lambda_tilde; every entry is a mean of squares, hence >= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyVarianceEstimate {
    values: Vec<f64>,
    n_used: usize,
}

impl ProxyVarianceEstimate {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_used(&self) -> usize {
        self.n_used
    }

    pub fn d(&self) -> usize {
        self.values.len()
    }
}

/// How a support estimate was selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    TopK,
    Threshold,
}

/// An estimated support: 0-based sorted indices plus selection metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportEstimate {
    indices: Vec<usize>,
    mode: SelectionMode,
    tie_broken: bool,
}

impl SupportEstimate {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|&i| i + 1).collect()
    }

    pub fn mode(&self) -> SelectionMode {
        self.mode
    }

    /// True when a tie at the selection boundary was broken by index order.
    pub fn tie_broken(&self) -> bool {
        self.tie_broken
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Exact set equality against a ground-truth support.
    pub fn matches(&self, truth: &SupportSet) -> bool {
        self.indices == truth.indices()
    }
}

/// A threshold for the indicator-style estimate {i : lambda_tilde[i] >= tau}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub tau: f64,
}

impl ThresholdSpec {
    pub fn new(tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::InvalidInput(format!("threshold {tau} not finite")));
        }
        Ok(ThresholdSpec { tau })
    }
}

/// Computes lambda_tilde from an observation batch.
///
/// Accumulates (phi_ji . y_j)^2 per coordinate in a single d-length running
/// sum over samples (the full d x d proxy covariance is never materialized).
/// Cost O(d n m); the summation order is fixed, so results are bitwise
/// reproducible.
pub fn proxy_variance(obs: &ObservationBatch) -> Result<ProxyVarianceEstimate> {
    let n = obs.n();
    if n == 0 {
        return Err(Error::InvalidInput("empty observation batch".into()));
    }
    let d = obs.d();
    let mut acc = vec![0.0; d];
    for (phi, y) in obs.matrices().matrices().iter().zip(obs.observations()) {
        for (i, slot) in acc.iter_mut().enumerate() {
            let proj = dot(phi.col(i), y);
            *slot += proj * proj;
        }
    }
    let inv_n = 1.0 / n as f64;
    for v in acc.iter_mut() {
        *v *= inv_n;
    }
    Ok(ProxyVarianceEstimate {
        values: acc,
        n_used: n,
    })
}

/// Indices of the k largest entries of lambda_tilde; ties broken by smallest
/// index, with `tie_broken` set when the k-th and (k+1)-th values coincide.
pub fn topk_support(est: &ProxyVarianceEstimate, k: usize) -> Result<SupportEstimate> {
    let d = est.d();
    if k < 1 || k > d {
        return Err(Error::InvalidInput(format!(
            "top-k size k={k} must satisfy 1 <= k <= d={d}"
        )));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        est.values[b]
            .total_cmp(&est.values[a])
            .then(a.cmp(&b))
    });
    let tie_broken = k < d && est.values[order[k - 1]] == est.values[order[k]];
    let mut indices = order[..k].to_vec();
    indices.sort_unstable();
    Ok(SupportEstimate {
        indices,
        mode: SelectionMode::TopK,
        tie_broken,
    })
}

/// The thresholded set {i : lambda_tilde[i] >= tau}; may have any size.
pub fn threshold_support(est: &ProxyVarianceEstimate, tau: &ThresholdSpec) -> SupportEstimate {
    let indices = est
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= tau.tau)
        .map(|(i, _)| i)
        .collect();
    SupportEstimate {
        indices,
        mode: SelectionMode::Threshold,
        tie_broken: false,
    }
}

/// Exact expectation of lambda_tilde per coordinate:
/// ((m+1)/m) * lambda_i + Tr(K_lambda)/m + sigma2.
pub fn expected_proxy(lambda: &VarianceVector, m: usize, sigma2: f64) -> Vec<f64> {
    let mf = m as f64;
    let bias = lambda.trace() / mf + sigma2;
    lambda
        .values()
        .iter()
        .map(|&l| (mf + 1.0) / mf * l + bias)
        .collect()
}

/// Midpoint threshold between the expected on-support minimum
/// ((m+1)/m * lambda_min + k/m + sigma2) and the expected off-support value
/// (k/m + sigma2), assuming a binary-scale trace k:
///
///   tau = k/m + sigma2 + ((m+1)/(2m)) * lambda_min.
pub fn default_threshold(k: usize, m: usize, sigma2: f64, lambda_min: f64) -> ThresholdSpec {
    let mf = m as f64;
    ThresholdSpec {
        tau: k as f64 / mf + sigma2 + (mf + 1.0) / (2.0 * mf) * lambda_min,
    }
}
