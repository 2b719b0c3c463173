//! Dense row-major observation matrix.

use crate::error::{DlccError, Result};
use nalgebra::DMatrix;

/// `n x d` matrix of finite observations, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// Builds a matrix from row-major values. Requires `n >= 2`, `d >= 1`
    /// and finite entries.
    pub fn new(values: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n < 2 {
            return Err(DlccError::InvalidData(format!(
                "need at least 2 rows, got {n}"
            )));
        }
        if d == 0 {
            return Err(DlccError::InvalidData("need at least 1 column".into()));
        }
        if values.len() != n * d {
            return Err(DlccError::InvalidData(format!(
                "expected {} values for a {n}x{d} matrix, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DlccError::InvalidData(format!(
                "non-finite value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(DlccError::InvalidData(format!(
                    "row {i} has {} columns, expected {d}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(values, rows.len(), d)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + Clone + '_ {
        self.values.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Rows selected by `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self::new(values, indices.len(), self.d)
    }

    /// Applies `f` to every row, producing a matrix with `d_out` columns.
    pub fn map_rows(&self, d_out: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Result<Self> {
        let mut values = vec![0.0; self.n * d_out];
        for (row, out) in self.rows().zip(values.chunks_exact_mut(d_out)) {
            f(row, out);
        }
        Self::new(values, self.n, d_out)
    }

    /// Column-wise z-scores using the `n - 1` standard deviation. Constant
    /// columns are centered but left unscaled.
    pub fn standardized(&self) -> Self {
        let mean = self.column_means();
        let mut sd = vec![0.0; self.d];
        for row in self.rows() {
            for (k, v) in row.iter().enumerate() {
                sd[k] += (v - mean[k]).powi(2);
            }
        }
        for s in &mut sd {
            *s = (*s / (self.n - 1) as f64).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(p, v)| (v - mean[p % self.d]) / sd[p % self.d])
            .collect();
        Self {
            n: self.n,
            d: self.d,
            values,
        }
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= self.n as f64);
        mean
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(DataMatrix::new(vec![1.0], 1, 1).is_err());
        assert!(DataMatrix::new(vec![1.0, 2.0], 2, 0).is_err());
        assert!(DataMatrix::new(vec![1.0, 2.0, 3.0], 2, 2).is_err());
        assert!(DataMatrix::new(vec![1.0, f64::NAN], 2, 1).is_err());
        assert!(DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn standardized_has_unit_variance() {
        let x = DataMatrix::from_rows(&[[1.0, 5.0], [2.0, 5.0], [6.0, 5.0]]).unwrap();
        let z = x.standardized();
        let m = z.column_means();
        assert!(m[0].abs() < 1e-12 && m[1].abs() < 1e-12);
        let var: f64 = z.rows().map(|r| r[0] * r[0]).sum::<f64>() / 2.0;
        assert!((var - 1.0).abs() < 1e-12);
        assert!(z.rows().all(|r| r[1] == 0.0));
    }
}
