//! Problem-instance generation: supports, variance vectors, signals,
//! measurement matrices, and observations.
//!
//! The generative model: n independent samples x_1..x_n in R^d share a
//! common support S of size k; coordinate j of each sample is zero-mean with
//! variance lambda_j (zero off the support). Sample i is observed through
//! its own fresh m x d measurement matrix Phi_i with zero-mean entries of
//! variance 1/m, as y_i = Phi_i x_i + w_i with w_i ~ N(0, sigma2 I_m).
//!
//! All batches are immutable after construction and safe to share across
//! threads. Determinism contract: the same stream state yields bitwise
//! identical output.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{Ensemble, Prior};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A k-subset of the coordinate set, stored 0-based, sorted, distinct.
///
/// Serialized forms (datasets, reports) use 1-based indices; convert with
/// [`SupportSet::one_based`] / [`SupportSet::from_one_based`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    indices: Vec<usize>,
    d: usize,
}

impl SupportSet {
    /// From 0-based indices; sorts and checks range/distinctness.
    pub fn new(mut indices: Vec<usize>, d: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.iter().any(|&i| i >= d) {
            return Err(Error::InvalidInput(format!(
                "support index out of range for d={d}"
            )));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate support indices".into()));
        }
        if indices.is_empty() {
            return Err(Error::InvalidInput("empty support".into()));
        }
        Ok(SupportSet { indices, d })
    }

    /// From sorted-or-not 1-based indices (the serialized form).
    pub fn from_one_based(indices: &[usize], d: usize) -> Result<Self> {
        if indices.iter().any(|&i| i == 0) {
            return Err(Error::InvalidInput("1-based index 0".into()));
        }
        SupportSet::new(indices.iter().map(|&i| i - 1).collect(), d)
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|&i| i + 1).collect()
    }

    /// Sorted 0-based indices.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// The estimand: variance vector lambda with values[i] > 0 iff i is in the
/// support, and on-support values in [lambda_min, lambda_max].
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceVector {
    values: Vec<f64>,
    support: SupportSet,
}

impl VarianceVector {
    pub fn new(values: Vec<f64>, support: SupportSet) -> Result<Self> {
        if values.len() != support.d() {
            return Err(Error::InvalidInput("lambda length != d".into()));
        }
        for (i, &v) in values.iter().enumerate() {
            let on = support.contains(i);
            if on && !(v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "lambda[{i}] = {v} must be > 0 on the support"
                )));
            }
            if !on && v != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "lambda[{i}] = {v} must be exactly 0 off the support"
                )));
            }
        }
        Ok(VarianceVector { values, support })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn d(&self) -> usize {
        self.values.len()
    }

    /// Tr(K_lambda) = sum of the variances.
    pub fn trace(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// How on-support variances are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMode {
    /// Indicator vector of the support (requires lambda_min = lambda_max = 1).
    Binary,
    /// I.i.d. uniform draws on [lambda_min, lambda_max].
    UniformRange,
}

/// n signal vectors in R^d; coordinates off the common support are exactly 0.
#[derive(Debug, Clone)]
pub struct SignalBatch {
    samples: Vec<Vec<f64>>,
}

impl SignalBatch {
    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }
}

/// n independent m x d measurement matrices.
#[derive(Debug, Clone)]
pub struct MeasurementMatrixBatch {
    matrices: Vec<Matrix>,
}

impl MeasurementMatrixBatch {
    pub fn new(matrices: Vec<Matrix>) -> Result<Self> {
        if let Some(first) = matrices.first() {
            let (m, d) = (first.nrows(), first.ncols());
            if matrices.iter().any(|p| p.nrows() != m || p.ncols() != d) {
                return Err(Error::InvalidInput("inconsistent matrix shapes".into()));
            }
        }
        Ok(MeasurementMatrixBatch { matrices })
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn n(&self) -> usize {
        self.matrices.len()
    }

    pub fn m(&self) -> usize {
        self.matrices.first().map_or(0, |p| p.nrows())
    }

    pub fn d(&self) -> usize {
        self.matrices.first().map_or(0, |p| p.ncols())
    }
}

/// The estimator's input: observations y_j paired with the matrices that
/// produced them.
#[derive(Debug, Clone)]
pub struct ObservationBatch {
    observations: Vec<Vec<f64>>,
    matrices: MeasurementMatrixBatch,
}

impl ObservationBatch {
    pub fn new(observations: Vec<Vec<f64>>, matrices: MeasurementMatrixBatch) -> Result<Self> {
        if observations.len() != matrices.n() {
            return Err(Error::InvalidInput(format!(
                "{} observations for {} matrices",
                observations.len(),
                matrices.n()
            )));
        }
        let m = matrices.m();
        if observations.iter().any(|y| y.len() != m) {
            return Err(Error::InvalidInput("observation length != m".into()));
        }
        Ok(ObservationBatch {
            observations,
            matrices,
        })
    }

    pub fn observations(&self) -> &[Vec<f64>] {
        &self.observations
    }

    pub fn matrices(&self) -> &MeasurementMatrixBatch {
        &self.matrices
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn m(&self) -> usize {
        self.matrices.m()
    }

    pub fn d(&self) -> usize {
        self.matrices.d()
    }
}

/// Uniformly random k-subset of [d].
pub fn sample_support<R: Rng>(d: usize, k: usize, rng: &mut R) -> Result<SupportSet> {
    if k < 1 || k > d {
        return Err(Error::InvalidConfig(format!(
            "support size k={k} must satisfy 1 <= k <= d={d}"
        )));
    }
    let picked = rand::seq::index::sample(rng, d, k).into_vec();
    SupportSet::new(picked, d)
}

/// Variance vector over the given support.
pub fn make_variance_vector<R: Rng>(
    support: &SupportSet,
    lambda_min: f64,
    lambda_max: f64,
    mode: VarianceMode,
    rng: &mut R,
) -> Result<VarianceVector> {
    if !(lambda_min > 0.0 && lambda_min <= lambda_max) {
        return Err(Error::InvalidConfig(format!(
            "need 0 < lambda_min <= lambda_max, got [{lambda_min}, {lambda_max}]"
        )));
    }
    let mut values = vec![0.0; support.d()];
    match mode {
        VarianceMode::Binary => {
            if lambda_min != 1.0 || lambda_max != 1.0 {
                return Err(Error::InvalidConfig(
                    "binary mode requires lambda_min = lambda_max = 1".into(),
                ));
            }
            for &i in support.indices() {
                values[i] = 1.0;
            }
        }
        VarianceMode::UniformRange => {
            for &i in support.indices() {
                values[i] = rng.random_range(lambda_min..=lambda_max);
            }
        }
    }
    VarianceVector::new(values, support.clone())
}

/// n independent signals; coordinate j has variance lambda_j under the prior.
pub fn sample_signals<R: Rng>(
    lambda: &VarianceVector,
    prior: Prior,
    n: usize,
    rng: &mut R,
) -> SignalBatch {
    let d = lambda.d();
    let on: Vec<(usize, f64)> = lambda
        .support()
        .indices()
        .iter()
        .map(|&i| (i, lambda.values()[i].sqrt()))
        .collect();
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let mut x = vec![0.0; d];
        for &(i, sd) in &on {
            x[i] = match prior {
                Prior::Gaussian => sd * rng.sample::<f64, _>(StandardNormal),
                Prior::Rademacher => {
                    if rng.random::<bool>() {
                        sd
                    } else {
                        -sd
                    }
                }
            };
        }
        samples.push(x);
    }
    SignalBatch { samples }
}

/// n independent m x d matrices; entry variance is exactly 1/m.
pub fn sample_measurement_matrices<R: Rng>(
    m: usize,
    d: usize,
    n: usize,
    ensemble: Ensemble,
    rng: &mut R,
) -> Result<MeasurementMatrixBatch> {
    if m < 1 || d < 1 || n < 1 {
        return Err(Error::InvalidConfig("m, d, n must all be >= 1".into()));
    }
    let scale = 1.0 / (m as f64).sqrt();
    let mut matrices = Vec::with_capacity(n);
    for _ in 0..n {
        let phi = match ensemble {
            Ensemble::Gaussian => Matrix::from_fn(m, d, |_, _| {
                scale * rng.sample::<f64, _>(StandardNormal)
            }),
            Ensemble::Rademacher => Matrix::from_fn(m, d, |_, _| {
                if rng.random::<bool>() {
                    scale
                } else {
                    -scale
                }
            }),
        };
        matrices.push(phi);
    }
    MeasurementMatrixBatch::new(matrices)
}

/// y_j = Phi_j x_j + w_j with w_j ~ N(0, sigma2 I_m); sigma2 = 0 gives the
/// exact noiseless product.
pub fn observe<R: Rng>(
    signals: &SignalBatch,
    matrices: MeasurementMatrixBatch,
    sigma2: f64,
    rng: &mut R,
) -> Result<ObservationBatch> {
    if signals.n() != matrices.n() {
        return Err(Error::InvalidInput(format!(
            "{} signals for {} matrices",
            signals.n(),
            matrices.n()
        )));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::InvalidConfig(format!("sigma2={sigma2} must be >= 0")));
    }
    let d = matrices.d();
    if signals.samples().iter().any(|x| x.len() != d) {
        return Err(Error::InvalidInput("signal length != matrix columns".into()));
    }
    let noise_sd = sigma2.sqrt();
    let mut observations = Vec::with_capacity(signals.n());
    for (x, phi) in signals.samples().iter().zip(matrices.matrices()) {
        let mut y = phi.matvec(x);
        if sigma2 > 0.0 {
            for v in y.iter_mut() {
                *v += noise_sd * rng.sample::<f64, _>(StandardNormal);
            }
        }
        observations.push(y);
    }
    ObservationBatch::new(observations, matrices)
}
