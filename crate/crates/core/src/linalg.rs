//! Small dense linear-algebra helpers on top of nalgebra.

use crate::error::{DlccError, Result};
use nalgebra::{DMatrix, DVector};

/// Reciprocal condition estimate below which a covariance matrix is treated
/// as singular.
const MIN_RCOND: f64 = 1e-12;

/// Moment covariance (`n - 1` denominator) of the given rows.
pub fn covariance<'a>(
    rows: impl Iterator<Item = &'a [f64]> + Clone,
    d: usize,
) -> (Vec<f64>, DMatrix<f64>) {
    let mut mean = vec![0.0; d];
    let mut n = 0usize;
    for r in rows.clone() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
        n += 1;
    }
    mean.iter_mut().for_each(|m| *m /= n.max(1) as f64);
    let mut cov = DMatrix::zeros(d, d);
    for r in rows {
        for a in 0..d {
            let da = r[a] - mean[a];
            for b in a..d {
                cov[(a, b)] += da * (r[b] - mean[b]);
            }
        }
    }
    let denom = n.saturating_sub(1).max(1) as f64;
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    (mean, cov)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order; eigenvectors are the matching columns.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        // deterministic sign: largest-magnitude component positive
        let (imax, _) = v.iter().enumerate().fold((0, 0.0f64), |acc, (k, x)| {
            if x.abs() > acc.1 {
                (k, x.abs())
            } else {
                acc
            }
        });
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// Whitening transform `y = L^{-1} x` for an SPD matrix `cov = L L'`, so
/// that `(a - b)' cov^{-1} (a - b) = |y(a) - y(b)|^2`.
#[derive(Debug, Clone)]
pub struct Whitener {
    inv_chol: DMatrix<f64>,
}

impl Whitener {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let d = cov.nrows();
        if d == 0 || cov.ncols() != d || cov.iter().any(|v| !v.is_finite()) {
            return Err(DlccError::SingularCovariance);
        }
        let chol = cov
            .clone()
            .cholesky()
            .ok_or(DlccError::SingularCovariance)?;
        let l = chol.l();
        let diag: Vec<f64> = (0..d).map(|i| l[(i, i)]).collect();
        let max = diag.iter().cloned().fold(0.0f64, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) || (min / max).powi(2) < MIN_RCOND {
            return Err(DlccError::SingularCovariance);
        }
        let inv_chol = l
            .solve_lower_triangular(&DMatrix::identity(d, d))
            .ok_or(DlccError::SingularCovariance)?;
        Ok(Self { inv_chol })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            inv_chol: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.inv_chol.nrows()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for (a, o) in out.iter_mut().enumerate().take(d) {
            let mut acc = 0.0;
            for b in 0..=a {
                acc += self.inv_chol[(a, b)] * x[b];
            }
            *o = acc;
        }
    }

    /// Squared Mahalanobis distance between `a` and `b`.
    pub fn sq_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff = DVector::from_iterator(a.len(), a.iter().zip(b).map(|(x, y)| x - y));
        let y = &self.inv_chol * diff;
        y.norm_squared()
    }
}

#[inline]
pub fn sq_euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
