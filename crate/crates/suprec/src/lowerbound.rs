//! Sample-complexity machinery as executable numerics: the exact Gaussian
//! KL divergence between support hypotheses, the eigenvalue inequality
//! chain that bounds it, the Wishart minimum-eigenvalue inverse-moment
//! Monte Carlo, and the closed-form sample-count formulas.
//!
//! For a measurement matrix phi and support S, write A_S for the Gram matrix
//! Phi_S Phi_S^T. Observations under support S (binary variances, no noise)
//! are N(0, A_S), so distinguishing two supports is governed by
//!
//!   KL(N(0, A_Su) || N(0, A_S0))
//!     = 1/2 (log det A_S0 - log det A_Su + Tr(A_S0^{-1} A_Su) - m).
//!
//! With a_1 >= ... >= a_m the eigenvalues of A_Su and b_1 >= ... >= b_m those
//! of A_S0, the trace inequality Tr(AB) <= sum_i a_i b_i (both spectra
//! descending) applies with A = A_S0^{-1}, whose descending eigenvalues are
//! the reciprocals of the *ascending* b's. The resulting per-index bounds
//! therefore pair a_i with beta_i := b_{m+1-i}:
//!
//!   exact_kl <= 1/2 sum_i [ log(beta_i/a_i) - (1 - a_i/beta_i) ]   (eig_bound)
//!            <= 1/2 sum_i (a_i - beta_i)^2 / (a_i beta_i)          (ratio_bound)
//!
//! using log x + (1-x)/x <= (x-1)^2/x per index. Independently, the
//! Hoffman-Wielandt inequality bounds the same-order spectral distance:
//! sum_i (a_i - b_i)^2 <= ||A_S0 - A_Su||_F^2.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{stream, stream_tag};
use crate::datagen::SupportSet;
use crate::error::{Error, Result};
use crate::linalg::{
    chol_log_det, chol_solve, cholesky, sym_eigenvalues, sym_min_eigenvalue, Matrix,
};

/// Eigenvalues of a PSD source, sorted descending; entries may dip to
/// -1e-10 * max|entry| of the source before being treated as errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    eigenvalues: Vec<f64>,
}

impl EigenSpectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// Every quantity in the KL inequality chain for one matrix draw.
#[derive(Debug, Clone, Serialize)]
pub struct KLChainReport {
    pub exact_kl: f64,
    /// Trace-lemma bound, largest-of-A_Su against smallest-of-A_S0 pairing.
    pub eig_bound: f64,
    /// Per-index scalar bound on eig_bound, same pairing.
    pub ratio_bound: f64,
    /// Same-order spectral distance sum_i (a_i - b_i)^2.
    pub hw_lhs: f64,
    /// ||A_S0 - A_Su||_F^2.
    pub hw_rhs: f64,
    /// Set when the draw is outside the m < k regime the chain targets.
    pub regime_warning: Option<String>,
}

impl KLChainReport {
    /// Checks exact_kl <= eig_bound <= ratio_bound and hw_lhs <= hw_rhs at a
    /// relative tolerance.
    pub fn satisfies_chain(&self, rel_tol: f64) -> bool {
        let slack = |x: f64| rel_tol * x.abs().max(1e-300);
        self.exact_kl <= self.eig_bound + slack(self.eig_bound)
            && self.eig_bound <= self.ratio_bound + slack(self.ratio_bound)
            && self.hw_lhs <= self.hw_rhs + slack(self.hw_rhs)
    }
}

/// Closed-form sufficient/necessary sample counts plus the plotting
/// normalization.
#[derive(Debug, Clone, Serialize)]
pub struct SampleBoundResult {
    /// Sufficient count:
    /// c_upper (lmax/lmin)^2 (k/m + 1 + sigma2/lmax)^2 ln(k(d-k)/delta).
    pub n_upper: f64,
    /// Necessary count: c_lower (lmax/lmin)^2 (k^2/m^2) ln(d-k+1).
    pub n_lower: f64,
    /// Plot normalization: (k^2 (1-m/k)^4 / m^2) ln(k(d-k)).
    pub n_norm: f64,
    pub regime_notes: Vec<String>,
}

/// Parameters for [`sample_bounds`]. `c_upper` and `c_lower` stand in for
/// the unnumbered absolute constants; defaults are 1 and 1/8.
#[derive(Debug, Clone, Serialize)]
pub struct SampleBoundParams {
    pub m: usize,
    pub k: usize,
    pub d: usize,
    pub sigma2: f64,
    pub delta: f64,
    pub c_upper: f64,
    pub c_lower: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl Default for SampleBoundParams {
    fn default() -> Self {
        SampleBoundParams {
            m: 2,
            k: 10,
            d: 100,
            sigma2: 0.0,
            delta: 1.0 / 3.0,
            c_upper: 1.0,
            c_lower: 0.125,
            lambda_min: 1.0,
            lambda_max: 1.0,
        }
    }
}

/// Spectrum of the Gram matrix Phi_S Phi_S^T, descending.
pub fn gram_spectrum(phi_s: &Matrix) -> Result<EigenSpectrum> {
    if !phi_s.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entries".into()));
    }
    let a = phi_s.gram();
    let eigenvalues = sym_eigenvalues(&a)?;
    let tol = 1e-10 * a.max_abs_entry();
    if let Some(&min) = eigenvalues.last() {
        if min < -tol {
            return Err(Error::DegenerateInput(format!(
                "Gram spectrum has eigenvalue {min:.3e} below -{tol:.3e}"
            )));
        }
    }
    Ok(EigenSpectrum { eigenvalues })
}

/// Smallest eigenvalue of a symmetric matrix (cyclic Jacobi; symmetry
/// required to 1e-12 relative, intended for m <= 128).
pub fn min_eig_symmetric(m: &Matrix) -> Result<f64> {
    sym_min_eigenvalue(m)
}

fn gram_cols(phi: &Matrix, support: &SupportSet) -> Matrix {
    phi.select_cols(support.indices()).gram()
}

/// Exact KL divergence between the zero-mean Gaussians with covariances
/// A_Su and A_S0 (Gram matrices of the respective column submatrices).
pub fn exact_gaussian_kl(phi: &Matrix, s_u: &SupportSet, s_0: &SupportSet) -> Result<f64> {
    if s_u.d() != phi.ncols() || s_0.d() != phi.ncols() {
        return Err(Error::InvalidInput(
            "support dimension != matrix columns".into(),
        ));
    }
    let a_u = gram_cols(phi, s_u);
    let a_0 = gram_cols(phi, s_0);
    kl_between_grams(&a_u, &a_0)
}

fn kl_between_grams(a_u: &Matrix, a_0: &Matrix) -> Result<f64> {
    let m = a_u.nrows();
    for (name, g) in [("A_Su", a_u), ("A_S0", a_0)] {
        let min = sym_min_eigenvalue(g)?;
        if min <= 1e-12 {
            return Err(Error::DegenerateInput(format!(
                "{name} is numerically singular (min eigenvalue {min:.3e})"
            )));
        }
    }
    let l_u = cholesky(a_u)
        .ok_or_else(|| Error::DegenerateInput("A_Su not positive definite".into()))?;
    let l_0 = cholesky(a_0)
        .ok_or_else(|| Error::DegenerateInput("A_S0 not positive definite".into()))?;
    // Tr(A_S0^{-1} A_Su) column by column through the Cholesky factor.
    let mut tr = 0.0;
    for j in 0..m {
        let x = chol_solve(&l_0, a_u.col(j));
        tr += x[j];
    }
    Ok(0.5 * (chol_log_det(&l_0) - chol_log_det(&l_u) + tr - m as f64))
}

/// Evaluates the full KL inequality chain for the hard support pair
/// S_0 = {1..k} and S_u = S_0 with its first element replaced by k+1
/// (1-based), on the given matrix.
pub fn kl_chain(phi: &Matrix, k: usize) -> Result<KLChainReport> {
    let d = phi.ncols();
    let m = phi.nrows();
    if k < 1 || k + 1 > d {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k and k+1 <= d, got k={k}, d={d}"
        )));
    }
    let s0 = SupportSet::new((0..k).collect(), d)?;
    let su = SupportSet::new((1..=k).collect(), d)?;
    let a_0 = gram_cols(phi, &s0);
    let a_u = gram_cols(phi, &su);

    let exact_kl = kl_between_grams(&a_u, &a_0)?;
    let a = sym_eigenvalues(&a_u)?; // descending
    let b = sym_eigenvalues(&a_0)?; // descending

    let mut eig_bound = 0.0;
    let mut ratio_bound = 0.0;
    let mut hw_lhs = 0.0;
    for i in 0..m {
        let ai = a[i];
        let beta = b[m - 1 - i]; // ascending pairing for the trace lemma
        eig_bound += (beta / ai).ln() - (1.0 - ai / beta);
        ratio_bound += (ai - beta) * (ai - beta) / (ai * beta);
        hw_lhs += (a[i] - b[i]) * (a[i] - b[i]);
    }
    eig_bound *= 0.5;
    ratio_bound *= 0.5;
    let hw_rhs = a_0.sub(&a_u)?.frobenius_norm_sq();

    let regime_warning = if m >= k {
        Some(format!(
            "m = {m} is not below k = {k}; the chain targets the measurement-starved regime"
        ))
    } else {
        None
    };
    Ok(KLChainReport {
        exact_kl,
        eig_bound,
        ratio_bound,
        hw_lhs,
        hw_rhs,
        regime_warning,
    })
}

/// Aggregate of a KL-chain Monte Carlo run.
#[derive(Debug, Clone, Serialize)]
pub struct KlChainSuiteReport {
    pub m: usize,
    pub k: usize,
    pub d: usize,
    pub trials: usize,
    /// Draws violating any chain inequality beyond 1e-9 relative.
    pub violations: usize,
    /// Numerically singular draws that were rejected and resampled.
    pub rejected: usize,
    pub pass: bool,
}

/// Runs `trials` independent Gaussian matrix draws through [`kl_chain`] and
/// counts violations at 1e-9 relative tolerance. Numerically singular draws
/// (min Gram eigenvalue <= 1e-12 * trace/m, a measure-zero event) are
/// rejected, counted, and resampled. Parallel over trials with derived
/// streams.
pub fn kl_chain_suite(
    m: usize,
    k: usize,
    d: usize,
    trials: usize,
    master_seed: u64,
) -> Result<KlChainSuiteReport> {
    if k + 1 > d || m < 1 {
        return Err(Error::InvalidConfig(format!(
            "need k+1 <= d and m >= 1, got m={m} k={k} d={d}"
        )));
    }
    let per_trial: Vec<(bool, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(master_seed, t, stream_tag::MONTE_CARLO);
            let scale = 1.0 / (m as f64).sqrt();
            let mut rejected = 0usize;
            loop {
                // Only columns 1..k+1 enter the chain; drawing d columns keeps
                // the stream layout identical to the generation path.
                let phi = Matrix::from_fn(m, d, |_, _| {
                    scale * rng.sample::<f64, _>(StandardNormal)
                });
                match kl_chain(&phi, k) {
                    Ok(rep) => return (rep.satisfies_chain(1e-9), rejected),
                    Err(Error::DegenerateInput(_)) => {
                        rejected += 1;
                        if rejected > 100 {
                            // Persistent singularity means a misconfiguration,
                            // not bad luck.
                            return (false, rejected);
                        }
                    }
                    Err(_) => return (false, rejected),
                }
            }
        })
        .collect();

    let violations = per_trial.iter().filter(|(ok, _)| !ok).count();
    let rejected = per_trial.iter().map(|(_, r)| r).sum();
    Ok(KlChainSuiteReport {
        m,
        k,
        d,
        trials,
        violations,
        rejected,
        pass: violations == 0,
    })
}

/// Monte Carlo estimate of E[a_min^{-4}] for the Wishart matrix
/// A = Phi Phi^T with standard normal entries.
#[derive(Debug, Clone, Serialize)]
pub struct WishartMomentReport {
    pub k: usize,
    pub m: usize,
    pub trials: usize,
    pub estimate: f64,
    pub std_error: f64,
    /// estimate * k^4 (1 - m/k)^8; O(1) across k at fixed m/k when the
    /// inverse-moment bound scales as c / (k^4 (1-m/k)^8).
    pub bound_ratio: f64,
    /// Set when k - m <= 7, outside the bound's stated regime.
    pub regime_warning: Option<String>,
}

/// Estimates E[a_min^{-4}] over `trials` draws of an m x k matrix with
/// N(0,1) entries. Parallel over trials with derived streams; the reduction
/// is a fixed-order sequential sum over the collected per-trial values, so
/// results are bitwise reproducible for a fixed seed.
pub fn wishart_min_eig_inv4(
    k: usize,
    m: usize,
    trials: usize,
    master_seed: u64,
) -> Result<WishartMomentReport> {
    if m < 1 || k < 1 || trials < 1 {
        return Err(Error::InvalidConfig("k, m, trials must be >= 1".into()));
    }
    if m > k {
        return Err(Error::InvalidConfig(format!(
            "need m <= k for an a.s. nonsingular Wishart matrix, got m={m} k={k}"
        )));
    }
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(master_seed, t, stream_tag::MONTE_CARLO);
            let phi = Matrix::from_fn(m, k, |_, _| rng.sample::<f64, _>(StandardNormal));
            let z = sym_min_eigenvalue(&phi.gram()).expect("Gram matrices are symmetric");
            z.powi(-4)
        })
        .collect();

    let tf = trials as f64;
    let mean = values.iter().sum::<f64>() / tf;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (tf - 1.0).max(1.0);
    let std_error = (var / tf).sqrt();
    let kf = k as f64;
    let bound_ratio = mean * kf.powi(4) * (1.0 - m as f64 / kf).powi(8);
    let regime_warning = if k - m <= 7 {
        Some(format!(
            "k - m = {} <= 7: outside the inverse-moment bound's regime",
            k - m
        ))
    } else {
        None
    };
    Ok(WishartMomentReport {
        k,
        m,
        trials,
        estimate: mean,
        std_error,
        bound_ratio,
        regime_warning,
    })
}

/// Closed-form sample-count formulas; natural logarithms throughout.
pub fn sample_bounds(p: &SampleBoundParams) -> Result<SampleBoundResult> {
    if p.k < 1 || p.k >= p.d {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= k <= d-1 (log k(d-k) must be defined), got k={} d={}",
            p.k, p.d
        )));
    }
    if p.m < 1 {
        return Err(Error::InvalidConfig("m must be >= 1".into()));
    }
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "delta={} must lie in (0,1)",
            p.delta
        )));
    }
    if !(p.lambda_min > 0.0 && p.lambda_min <= p.lambda_max) {
        return Err(Error::InvalidConfig(
            "need 0 < lambda_min <= lambda_max".into(),
        ));
    }
    let (kf, mf, df) = (p.k as f64, p.m as f64, p.d as f64);
    let ratio2 = (p.lambda_max / p.lambda_min).powi(2);
    let n_upper = p.c_upper
        * ratio2
        * (kf / mf + 1.0 + p.sigma2 / p.lambda_max).powi(2)
        * (kf * (df - kf) / p.delta).ln();
    let n_lower = p.c_lower * ratio2 * (kf / mf).powi(2) * (df - kf + 1.0).ln();
    let n_norm = kf * kf * (1.0 - mf / kf).powi(4) / (mf * mf) * (kf * (df - kf)).ln();

    let mut regime_notes = Vec::new();
    if (p.m as f64) >= kf / 2.0 {
        regime_notes.push(format!(
            "outside Theorem 1 regime: the matching lower bound needs m < k/2 (m={}, k={})",
            p.m, p.k
        ));
    }
    if (p.m as f64) < kf.ln().powi(2) {
        regime_notes.push(format!(
            "m = {} below (log k)^2 = {:.2}: the sufficient count is proved only above it",
            p.m,
            kf.ln().powi(2)
        ));
    }
    Ok(SampleBoundResult {
        n_upper,
        n_lower,
        n_norm,
        regime_notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{stream, stream_tag};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        stream(seed, 0, stream_tag::MONTE_CARLO)
    }

    fn random_phi<R: Rng>(m: usize, d: usize, rng: &mut R) -> Matrix {
        let scale = 1.0 / (m as f64).sqrt();
        Matrix::from_fn(m, d, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn gram_spectrum_rank_one() {
        // Single column v: spectrum (||v||^2, 0, ..., 0).
        let v = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![2.0]]).unwrap();
        let s = gram_spectrum(&v).unwrap();
        assert_relative_eq!(s.max(), 9.0, max_relative = 1e-12);
        assert!(s.eigenvalues()[1].abs() < 1e-9);
        assert!(s.eigenvalues()[2].abs() < 1e-9);
    }

    #[test]
    fn gram_spectrum_orthonormal_rows() {
        let phi = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let s = gram_spectrum(&phi).unwrap();
        assert_relative_eq!(s.max(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(s.min(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn gram_spectrum_2x2_closed_form() {
        // Phi with Gram [[2,1],[1,2]]: eigenvalues 3 and 1. Build Phi by
        // Cholesky of the target Gram.
        let g = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let phi = {
            let l = cholesky(&g).unwrap();
            // Gram of L (as columns of a 2x2) is L L^T = G.
            Matrix::from_fn(2, 2, |i, j| l.get(i, j))
        };
        let s = gram_spectrum(&phi).unwrap();
        assert_relative_eq!(s.eigenvalues()[0], 3.0, max_relative = 1e-10);
        assert_relative_eq!(s.eigenvalues()[1], 1.0, max_relative = 1e-10);
    }

    #[test]
    fn gram_spectrum_sums_to_frobenius() {
        let mut r = rng(1);
        for _ in 0..50 {
            let phi = random_phi(4, 9, &mut r);
            let s = gram_spectrum(&phi).unwrap();
            assert_relative_eq!(s.sum(), phi.frobenius_norm_sq(), max_relative = 1e-9);
        }
    }

    #[test]
    fn min_eig_small_cases() {
        let i2 = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_relative_eq!(min_eig_symmetric(&i2).unwrap(), 1.0);
        let d = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert_relative_eq!(min_eig_symmetric(&d).unwrap(), 1.0);
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_relative_eq!(min_eig_symmetric(&a).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn kl_same_support_is_zero() {
        let mut r = rng(2);
        let phi = random_phi(3, 10, &mut r);
        let s = SupportSet::new(vec![0, 1, 2, 3, 4], 10).unwrap();
        let kl = exact_gaussian_kl(&phi, &s, &s).unwrap();
        assert!(kl.abs() < 1e-9, "kl {kl}");
    }

    #[test]
    fn kl_scalar_closed_form() {
        // m = 1: the Gram matrices are the scalars a = sum_{i in Su} phi_i^2
        // and b = sum_{i in S0} phi_i^2, and KL = (log(b/a) + a/b - 1)/2.
        // The scalar expression is the independent oracle.
        let mut r = rng(3);
        for _ in 0..50 {
            let phi = random_phi(1, 6, &mut r);
            let su = SupportSet::new(vec![0, 1], 6).unwrap();
            let s0 = SupportSet::new(vec![2, 3, 4], 6).unwrap();
            let kl = exact_gaussian_kl(&phi, &su, &s0).unwrap();
            let scalar = |s: &SupportSet| -> f64 {
                s.indices().iter().map(|&i| phi.get(0, i).powi(2)).sum()
            };
            let (a, b) = (scalar(&su), scalar(&s0));
            let oracle = 0.5 * ((b / a).ln() + a / b - 1.0);
            assert_relative_eq!(kl, oracle, max_relative = 1e-10);
        }
    }

    #[test]
    fn kl_chain_identical_columns_collapses() {
        // Columns 1 and k+1 identical: A_S0 = A_Su, so the divergence and the
        // spectral distances vanish. The per-index trace-lemma bounds pair
        // opposite ends of the (equal) spectra, so they stay nonnegative
        // rather than collapsing, and the chain still holds.
        let mut r = rng(5);
        let k = 4;
        let mut phi = random_phi(2, 8, &mut r);
        let c0 = phi.col(0).to_vec();
        phi.col_mut(k).copy_from_slice(&c0);
        let rep = kl_chain(&phi, k).unwrap();
        assert!(rep.exact_kl.abs() < 1e-9, "exact_kl {}", rep.exact_kl);
        assert!(rep.eig_bound >= -1e-12);
        assert!(rep.hw_lhs < 1e-12);
        assert!(rep.hw_rhs < 1e-12);
        assert!(rep.satisfies_chain(1e-9));
    }

    #[test]
    fn kl_chain_holds_on_random_draws() {
        let mut r = rng(6);
        for _ in 0..500 {
            let phi = random_phi(3, 20, &mut r);
            let rep = kl_chain(&phi, 8).unwrap();
            assert!(
                rep.satisfies_chain(1e-9),
                "chain violated: {rep:?}"
            );
            assert!(rep.exact_kl >= -1e-12);
        }
    }

    #[test]
    fn kl_chain_hw_rhs_matches_rank_two_difference() {
        // A_S0 - A_Su = phi_1 phi_1^T - phi_{k+1} phi_{k+1}^T; computing the
        // Frobenius norm of that rank-two difference entrywise must agree
        // with the report.
        let mut r = rng(7);
        let k = 8;
        for _ in 0..100 {
            let phi = random_phi(3, 20, &mut r);
            let rep = kl_chain(&phi, k).unwrap();
            let c1 = phi.col(0);
            let ck1 = phi.col(k);
            let m = phi.nrows();
            let mut fro = 0.0;
            for u in 0..m {
                for v in 0..m {
                    let e = c1[u] * c1[v] - ck1[u] * ck1[v];
                    fro += e * e;
                }
            }
            assert_relative_eq!(rep.hw_rhs, fro, max_relative = 1e-9);
        }
    }

    #[test]
    fn kl_chain_warns_outside_regime() {
        // m = k still has almost-surely nonsingular Grams but sits outside
        // the measurement-starved regime: computed, with a warning.
        let mut r = rng(8);
        let phi = random_phi(3, 8, &mut r);
        let rep = kl_chain(&phi, 3).unwrap();
        assert!(rep.regime_warning.is_some());
        assert!(rep.satisfies_chain(1e-9));
        // m > k makes the m x m Grams rank deficient; the divergence between
        // the (degenerate) Gaussians is not defined.
        let phi = random_phi(6, 8, &mut r);
        assert!(matches!(
            kl_chain(&phi, 3),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn exact_kl_bounded_by_eig_bound_on_symmetric_difference_pairs() {
        // |S_u \ S_0| = 1 either way, as in the chain construction.
        let mut r = rng(9);
        for _ in 0..200 {
            let phi = random_phi(3, 15, &mut r);
            let rep = kl_chain(&phi, 6).unwrap();
            let s0 = SupportSet::new((0..6).collect(), 15).unwrap();
            let su = SupportSet::new((1..=6).collect(), 15).unwrap();
            let kl = exact_gaussian_kl(&phi, &su, &s0).unwrap();
            assert_relative_eq!(kl, rep.exact_kl, max_relative = 1e-10);
            assert!(kl <= rep.eig_bound * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn trace_lemma_on_random_pd_pairs() {
        // Tr(AB) <= sum_i a_i b_i with both spectra descending; 10^4 draws.
        let mut r = rng(10);
        for _ in 0..10_000 {
            let g1 = random_phi(3, 5, &mut r).gram();
            let g2 = random_phi(3, 5, &mut r).gram();
            let tr_ab = {
                let mut t = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        t += g1.get(i, j) * g2.get(j, i);
                    }
                }
                t
            };
            let a = sym_eigenvalues(&g1).unwrap();
            let b = sym_eigenvalues(&g2).unwrap();
            let paired: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            assert!(
                tr_ab <= paired * (1.0 + 1e-9) + 1e-12,
                "Tr(AB) = {tr_ab} > {paired}"
            );
        }
    }

    #[test]
    fn scalar_log_inequality_sampled() {
        // log x + (1-x)/x <= (x-1)^2/x for x > 0.
        let mut r = rng(11);
        for _ in 0..10_000 {
            let x: f64 = (r.sample::<f64, _>(StandardNormal) * 2.0_f64).exp();
            let lhs = x.ln() + (1.0 - x) / x;
            let rhs = (x - 1.0) * (x - 1.0) / x;
            assert!(lhs <= rhs + 1e-12 * rhs.abs().max(1.0), "x = {x}");
        }
    }

    #[test]
    fn nonbinary_eigenvalue_domination() {
        // A_lambda = Phi K_lambda Phi^T for lambda with lambda_max on the
        // first k-1 coordinates and lambda_min at k+1 dominates
        // lambda_max * sum_{i<k} phi_i phi_i^T in the PSD order, so its
        // minimum eigenvalue is at least lambda_max * min-eig of the partial
        // sum. Checked on every draw.
        let (m, k, d) = (3, 8, 20);
        let (lmin, lmax) = (0.5, 2.0);
        let mut r = rng(12);
        for _ in 0..2_000 {
            let phi = random_phi(m, d, &mut r);
            let mut lambda = vec![0.0; d];
            for i in 0..(k - 1) {
                lambda[i] = lmax;
            }
            lambda[k] = lmin; // coordinate k+1, 1-based
            // A_lambda = sum_i lambda_i phi_i phi_i^T
            let mut a_lambda = Matrix::zeros(m, m);
            for (i, &li) in lambda.iter().enumerate() {
                if li == 0.0 {
                    continue;
                }
                let c = phi.col(i);
                for u in 0..m {
                    for v in 0..m {
                        let val = a_lambda.get(u, v) + li * c[u] * c[v];
                        a_lambda.set(u, v, val);
                    }
                }
            }
            let partial = phi.select_cols(&(0..k - 1).collect::<Vec<_>>()).gram();
            let lhs = min_eig_symmetric(&a_lambda).unwrap();
            let rhs = lmax * min_eig_symmetric(&partial).unwrap();
            assert!(
                lhs >= rhs - 1e-9 * rhs.abs().max(1e-12),
                "min-eig {lhs} < {rhs}"
            );
        }
    }

    #[test]
    fn kl_chain_suite_small_run_is_clean_and_deterministic() {
        let a = kl_chain_suite(3, 8, 20, 2_000, 123).unwrap();
        assert_eq!(a.violations, 0);
        assert!(a.pass);
        let b = kl_chain_suite(3, 8, 20, 2_000, 123).unwrap();
        assert_eq!(a.rejected, b.rejected);
    }

    #[test]
    fn wishart_m1_matches_inverse_chi_squared_moment() {
        // m = 1: A = ||phi||^2 ~ chi^2_k, and
        // E[Z^-4] = 1/((k-2)(k-4)(k-6)(k-8)) for k > 8.
        let k = 20;
        let rep = wishart_min_eig_inv4(k, 1, 200_000, 31).unwrap();
        let kf = k as f64;
        let analytic = 1.0 / ((kf - 2.0) * (kf - 4.0) * (kf - 6.0) * (kf - 8.0));
        assert!(
            (rep.estimate - analytic).abs() <= 3.0 * rep.std_error,
            "MC {} vs analytic {analytic} +- {}",
            rep.estimate,
            3.0 * rep.std_error
        );
        assert!(rep.regime_warning.is_none());
    }

    #[test]
    fn wishart_fixed_seed_identical_and_regime_warning() {
        let a = wishart_min_eig_inv4(12, 6, 500, 9).unwrap();
        let b = wishart_min_eig_inv4(12, 6, 500, 9).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert!(a.regime_warning.is_some()); // k - m = 6 <= 7
    }

    #[test]
    fn wishart_scaling_across_sizes() {
        let r1 = wishart_min_eig_inv4(20, 5, 20_000, 17).unwrap();
        let r2 = wishart_min_eig_inv4(40, 10, 20_000, 18).unwrap();
        let ratio = r1.bound_ratio / r2.bound_ratio;
        assert!(
            (1.0 / 3.0..3.0).contains(&ratio),
            "bound ratios {} vs {}",
            r1.bound_ratio,
            r2.bound_ratio
        );
    }

    #[test]
    fn sample_bounds_match_formula_substitution() {
        // n_norm = 25 * 0.4096 * ln(900) ~= 69.66.
        let p = SampleBoundParams::default();
        let r = sample_bounds(&p).unwrap();
        assert_relative_eq!(r.n_norm, 69.657, epsilon = 0.01);
        // n_upper = 36 * ln(2700) ~= 284.44 at c_upper = 1, delta = 1/3.
        assert_relative_eq!(r.n_upper, 36.0 * 2700.0_f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(r.n_upper, 284.44, epsilon = 0.01);
        assert!(r.regime_notes.iter().any(|s| s.contains("(log k)^2")));

        // lambda_max = lambda_min scales out exactly.
        let mut q = SampleBoundParams::default();
        q.lambda_min = 2.0;
        q.lambda_max = 2.0;
        q.sigma2 = 0.0;
        let r2 = sample_bounds(&q).unwrap();
        assert_relative_eq!(r2.n_upper, r.n_upper, max_relative = 1e-12);
        assert_relative_eq!(r2.n_lower, r.n_lower, max_relative = 1e-12);

        // A 2:1 variance ratio scales both bounds by 4 (noiseless).
        let mut w = SampleBoundParams::default();
        w.lambda_min = 1.0;
        w.lambda_max = 2.0;
        let r4 = sample_bounds(&w).unwrap();
        assert_relative_eq!(r4.n_lower, 4.0 * r.n_lower, max_relative = 1e-12);

        // k = d is rejected.
        let mut bad = SampleBoundParams::default();
        bad.k = bad.d;
        assert!(sample_bounds(&bad).is_err());
    }

    #[test]
    fn sample_bounds_flags_theorem1_regime() {
        let mut p = SampleBoundParams::default();
        p.m = 5; // k = 10, m >= k/2
        let r = sample_bounds(&p).unwrap();
        assert!(r.regime_notes.iter().any(|s| s.contains("m < k/2")));
    }
}
