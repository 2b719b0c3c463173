//! Depth-based similarity matrices. Row `i` holds the depth of every
//! observation with respect to the dataset reflected through `x_i`.

use crate::data::DataMatrix;
use crate::depth::CovarianceModel;
use crate::error::{DlccError, Result};
use crate::linalg::{sq_euclid, Whitener};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::io::{Read, Write};
use std::path::Path;

const CACHE_MAGIC: &[u8; 8] = b"DLCCSIM1";
const BLOCK: usize = 128;

/// Dense `n x n` similarity matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
    symmetric: bool,
}

impl SimilarityMatrix {
    pub fn from_values(n: usize, values: Vec<f64>, symmetric: bool) -> Result<Self> {
        if values.len() != n * n {
            return Err(DlccError::InvalidData(format!(
                "similarity matrix needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(Self {
            n,
            values,
            symmetric,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Averages `S_ij` and `S_ji`.
    pub fn symmetrize(&self) -> Self {
        if self.symmetric {
            return self.clone();
        }
        let n = self.n;
        let mut values = self.values.clone();
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.5 * (self.values[i * n + j] + self.values[j * n + i]);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self {
            n,
            values,
            symmetric: true,
        }
    }

    /// Writes the 16-byte header (magic, `u32` n, `u32` flags) followed by
    /// the row-major values, all little-endian.
    pub fn write_cache(&self, mut w: impl Write) -> Result<()> {
        let n = u32::try_from(self.n).map_err(|_| DlccError::Cache("matrix too large".into()))?;
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&u32::from(self.symmetric).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_cache(mut r: impl Read) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|e| DlccError::Cache(format!("truncated header: {e}")))?;
        if &header[..8] != CACHE_MAGIC {
            return Err(DlccError::Cache("bad magic".into()));
        }
        let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let flags = u32::from_le_bytes(header[12..16].try_into().unwrap());
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != n * n * 8 {
            return Err(DlccError::Cache(format!(
                "expected {} payload bytes for n = {n}, found {}",
                n * n * 8,
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            n,
            values,
            symmetric: flags & 1 == 1,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_cache(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_cache(std::io::BufReader::new(f))
    }
}

/// Shared read-only quantities for the reflection-based spatial similarity:
/// unit-vector sums `e` (`n x d`) and pairwise norms `l` (`n x n`).
#[derive(Debug, Clone)]
pub struct ReflectionWorkspace {
    n: usize,
    d: usize,
    pub e: Vec<f64>,
    pub l: Vec<f64>,
    sq: Vec<f64>,
}

impl ReflectionWorkspace {
    pub fn new(x: &DataMatrix) -> Result<Self> {
        let (n, d) = (x.nrows(), x.ncols());
        let sq: Vec<f64> = (0..n * n)
            .map(|p| sq_euclid(x.row(p / n), x.row(p % n)))
            .collect();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if sq[i * n + j] == 0.0 {
                    pairs.push((i, j));
                }
            }
        }
        if !pairs.is_empty() {
            return Err(DlccError::DuplicateRows { pairs });
        }
        let l: Vec<f64> = sq.iter().map(|v| v.sqrt()).collect();
        let mut e = vec![0.0; n * d];
        for q in 0..n {
            let xq = x.row(q);
            let eq = &mut e[q * d..(q + 1) * d];
            for j in 0..n {
                if j == q {
                    continue;
                }
                let inv = 1.0 / l[q * n + j];
                for (k, v) in eq.iter_mut().enumerate() {
                    *v += (xq[k] - x.row(j)[k]) * inv;
                }
            }
        }
        Ok(Self { n, d, e, l, sq })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.d)
    }
}

/// `|v^i - u|^2` where `v^i = 2 x_i - v`, from pairwise norms alone:
/// `2|v - x_i|^2 + 2|u - x_i|^2 - |u - v|^2`, clamped at zero.
pub fn reflected_sq_norm(l: &[f64], n: usize, i: usize, u: usize, v: usize) -> f64 {
    let a = l[v * n + i];
    let b = l[u * n + i];
    let c = l[u * n + v];
    (2.0 * a * a + 2.0 * b * b - c * c).max(0.0)
}

/// Spatial-depth similarity via the reflection identity. Fails on duplicate
/// observations.
pub fn build_sd_similarity(x: &DataMatrix) -> Result<SimilarityMatrix> {
    let ws = ReflectionWorkspace::new(x)?;
    let (n, d) = (x.nrows(), x.ncols());
    let xm = DMatrix::from_row_slice(n, d, x.as_slice());
    let denom = (2 * n - 1) as f64;
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        let xi = x.row(i);
        let mut r = DMatrix::<f64>::zeros(BLOCK.min(n), n);
        for start in (0..n).step_by(BLOCK) {
            let rows = BLOCK.min(n - start);
            if r.nrows() != rows {
                r = DMatrix::zeros(rows, n);
            }
            let mut t = vec![0.0; rows];
            for b in 0..rows {
                let q = start + b;
                let mut acc = 0.0;
                for j in 0..n {
                    let v = if j == i {
                        0.0
                    } else {
                        let scale = 2.0 * ws.sq[j * n + i] + 2.0 * ws.sq[q * n + i];
                        let sq = scale - ws.sq[q * n + j];
                        // reflected point coincides with x_q up to rounding
                        if sq > 1e-12 * scale {
                            1.0 / sq.sqrt()
                        } else {
                            0.0
                        }
                    };
                    r[(b, j)] = v;
                    acc += v;
                }
                t[b] = acc;
            }
            let w = &r * &xm;
            for b in 0..rows {
                let q = start + b;
                if q == i {
                    out[q] = 1.0;
                    continue;
                }
                let xq = x.row(q);
                let eq = &ws.e[q * d..(q + 1) * d];
                let mut norm_sq = 0.0;
                for k in 0..d {
                    let tilde = (xq[k] - 2.0 * xi[k]) * t[b] + w[(b, k)];
                    let total = eq[k] + tilde;
                    norm_sq += total * total;
                }
                out[q] = (1.0 - norm_sq.sqrt() / denom).clamp(0.0, 1.0);
            }
        }
    });
    Ok(SimilarityMatrix {
        n,
        values,
        symmetric: false,
    })
}

/// Mahalanobis-depth similarity; row `i` uses the covariance assigned to
/// observation `i`.
pub fn build_md_similarity(x: &DataMatrix, model: &CovarianceModel) -> Result<SimilarityMatrix> {
    let (n, d) = (x.nrows(), x.ncols());
    if model.assignment.len() != n {
        return Err(DlccError::Config(format!(
            "covariance assignment has length {}, expected {n}",
            model.assignment.len()
        )));
    }
    let whitened: Vec<DataMatrix> = model
        .matrices
        .iter()
        .enumerate()
        .map(|(m, cov)| {
            let w = Whitener::new(cov).unwrap_or_else(|_| {
                log::warn!("covariance matrix {m} not invertible; using identity for its rows");
                Whitener::identity(d)
            });
            x.map_rows(d, |r, out| w.apply(r, out))
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        let y = &whitened[model.assignment[i]];
        let yi = y.row(i);
        for (j, o) in out.iter_mut().enumerate() {
            *o = if j == i {
                1.0
            } else {
                1.0 / (1.0 + sq_euclid(y.row(j), yi))
            };
        }
    });
    Ok(SimilarityMatrix {
        n,
        values,
        symmetric: false,
    })
}
