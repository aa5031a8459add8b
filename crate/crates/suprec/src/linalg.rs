//! Dense column-major matrices and the small symmetric eigensolver used by
//! the Gram-spectrum machinery.
//!
//! Measurement matrices are accessed column by column (the estimator and the
//! concentration statistics are built from column norms and column inner
//! products), so storage is column-major and `col` returns a contiguous
//! slice. Eigenvalues come from a cyclic Jacobi iteration, which is accurate
//! and simple for the small symmetric matrices that arise here (m <= 128).

use crate::error::{Error, Result};

/// Dense column-major matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Matrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(nrows, ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                m.data[j * nrows + i] = f(i, j);
            }
        }
        m
    }

    /// Builds from row-major nested arrays (the JSON layout).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidInput("ragged row lengths".into()));
        }
        Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    /// Row-major nested arrays (the JSON layout).
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.nrows)
            .map(|i| (0..self.ncols).map(|j| self.get(i, j)).collect())
            .collect()
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nrows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.nrows + i] = v;
    }

    /// Column j as a contiguous slice.
    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.nrows)
    }

    /// New matrix from the given columns of `self`, in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.nrows, cols.len());
        for (dst, &src) in cols.iter().enumerate() {
            out.col_mut(dst).copy_from_slice(self.col(src));
        }
        out
    }

    /// self * x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for (j, xj) in x.iter().enumerate() {
            if *xj != 0.0 {
                axpy(*xj, self.col(j), &mut y);
            }
        }
        y
    }

    /// self * self^T, an nrows x nrows symmetric matrix.
    pub fn gram(&self) -> Matrix {
        let m = self.nrows;
        let mut a = Matrix::zeros(m, m);
        for c in self.columns() {
            for u in 0..m {
                let cu = c[u];
                for v in u..m {
                    let val = a.get(u, v) + cu * c[v];
                    a.set(u, v, val);
                }
            }
        }
        for u in 0..m {
            for v in 0..u {
                let val = a.get(v, u);
                a.set(u, v, val);
            }
        }
        a
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::InvalidInput("matrix shape mismatch".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).sum()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Errors unless max |A_ij - A_ji| <= rel_tol * max |A_ij| (and A is square).
pub fn check_symmetric(a: &Matrix, rel_tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidInput(format!(
            "matrix is {}x{}, not square",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.max_abs_entry().max(f64::MIN_POSITIVE);
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            let gap = (a.get(i, j) - a.get(j, i)).abs();
            if gap > rel_tol * scale {
                return Err(Error::DegenerateInput(format!(
                    "asymmetry |A[{i},{j}] - A[{j},{i}]| = {gap:.3e} exceeds {rel_tol:.1e} relative"
                )));
            }
        }
    }
    Ok(())
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigenvalues of a symmetric matrix, sorted descending.
///
/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
/// 1e-12 * ||A||_F. Symmetry is required to 1e-12 relative. Intended for the
/// small matrices of this crate; cost is O(sweeps * n^3) with a handful of
/// sweeps in practice.
pub fn sym_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    check_symmetric(a, 1e-12)?;
    if !a.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entries".into()));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![a.get(0, 0)]);
    }

    // Work on a row-major copy; only the upper triangle is kept exact and the
    // lower is mirrored on update.
    let mut w: Vec<f64> = (0..n * n).map(|idx| a.get(idx / n, idx % n)).collect();
    let target = 1e-12 * a.frobenius_norm_sq().sqrt();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * w[p * n + q] * w[p * n + q];
            }
        }
        if off.sqrt() <= target {
            let mut eig: Vec<f64> = (0..n).map(|i| w[i * n + i]).collect();
            eig.sort_by(|x, y| y.total_cmp(x));
            return Ok(eig);
        }

        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = w[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = w[p * n + p];
                let aqq = w[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                // Smaller-angle root; stable for large |theta|.
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                w[p * n + p] = app - t * apq;
                w[q * n + q] = aqq + t * apq;
                w[p * n + q] = 0.0;
                w[q * n + p] = 0.0;
                for j in 0..n {
                    if j == p || j == q {
                        continue;
                    }
                    let ajp = w[j * n + p];
                    let ajq = w[j * n + q];
                    let np = c * ajp - s * ajq;
                    let nq = s * ajp + c * ajq;
                    w[j * n + p] = np;
                    w[p * n + j] = np;
                    w[j * n + q] = nq;
                    w[q * n + j] = nq;
                }
            }
        }
    }
    Err(Error::DegenerateInput(
        "Jacobi iteration did not converge".into(),
    ))
}

/// Smallest eigenvalue of a symmetric matrix (Jacobi; see `sym_eigenvalues`).
pub fn sym_min_eigenvalue(a: &Matrix) -> Result<f64> {
    let eig = sym_eigenvalues(a)?;
    eig.last()
        .copied()
        .ok_or_else(|| Error::InvalidInput("empty matrix".into()))
}

/// Cholesky factor L (lower triangular, A = L L^T), or None when A is not
/// numerically positive definite.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    if a.nrows() != a.ncols() {
        return None;
    }
    let n = a.nrows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a.get(j, j);
        for t in 0..j {
            let ljt = l.get(j, t);
            diag -= ljt * ljt;
        }
        if !(diag > 0.0) {
            return None;
        }
        let ljj = diag.sqrt();
        l.set(j, j, ljj);
        for i in (j + 1)..n {
            let mut v = a.get(i, j);
            for t in 0..j {
                v -= l.get(i, t) * l.get(j, t);
            }
            l.set(i, j, v / ljj);
        }
    }
    Some(l)
}

/// log det(A) from its Cholesky factor: 2 * sum_i ln L_ii.
pub fn chol_log_det(l: &Matrix) -> f64 {
    (0..l.nrows()).map(|i| 2.0 * l.get(i, i).ln()).sum()
}

/// Solves A x = b given A = L L^T.
pub fn chol_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    assert_eq!(b.len(), n);
    let mut y = b.to_vec();
    for i in 0..n {
        for t in 0..i {
            y[i] -= l.get(i, t) * y[t];
        }
        y[i] /= l.get(i, i);
    }
    for i in (0..n).rev() {
        for t in (i + 1)..n {
            y[i] -= l.get(t, i) * y[t];
        }
        y[i] /= l.get(i, i);
    }
    y
}
