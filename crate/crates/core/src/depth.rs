//! Point depth (Mahalanobis and spatial) and the covariance-model selection
//! that parameterizes Mahalanobis similarity.

use crate::data::DataMatrix;
use crate::eev::{default_k_candidates, fit_eev};
use crate::error::Result;
use crate::linalg::{covariance, sorted_eigen, Whitener};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Which depth notion drives similarity, local ranks and classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthKind {
    Md,
    Sd,
}

/// Mahalanobis depth `[1 + (z - c)' cov^{-1} (z - c)]^{-1}`.
pub fn md_depth(z: &[f64], center: &[f64], cov: &DMatrix<f64>) -> Result<f64> {
    let w = Whitener::new(cov)?;
    Ok(1.0 / (1.0 + w.sq_dist(z, center)))
}

/// Sample spatial depth of `z` with respect to the rows of `x`.
pub fn spatial_depth(z: &[f64], x: &DataMatrix) -> f64 {
    spatial_depth_rows(z, x.rows(), x.nrows())
}

/// Spatial depth over an arbitrary collection of `count` sample rows. A row
/// equal to `z` contributes the zero vector but still counts in `count`.
pub fn spatial_depth_rows<'a>(
    z: &[f64],
    rows: impl Iterator<Item = &'a [f64]>,
    count: usize,
) -> f64 {
    let d = z.len();
    let mut acc = vec![0.0; d];
    for r in rows {
        let mut sq = 0.0;
        for k in 0..d {
            let t = z[k] - r[k];
            sq += t * t;
        }
        if sq > 0.0 {
            let inv = 1.0 / sq.sqrt();
            for k in 0..d {
                acc[k] += (z[k] - r[k]) * inv;
            }
        }
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt() / count as f64;
    (1.0 - norm).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateOutcome {
    Pass,
    Fail,
}

/// Principal-component gate on descending variance proportions: passes when
/// the leading proportion exceeds 0.6 or the leading `H` proportions sum past
/// 0.95, `H` being the count above 0.05 (reduced to `d - 1` when all are).
pub fn pca_gate(vp: &[f64]) -> GateOutcome {
    let d = vp.len();
    if d == 0 {
        return GateOutcome::Fail;
    }
    if vp[0] > 0.6 {
        return GateOutcome::Pass;
    }
    let mut h = vp.iter().filter(|&&v| v > 0.05).count();
    if h == d {
        h = d - 1;
    }
    if vp[..h].iter().sum::<f64>() > 0.95 {
        GateOutcome::Pass
    } else {
        GateOutcome::Fail
    }
}

/// Normalizes eigenvalues (negatives clamped to 0) into descending proportions.
pub fn variance_proportions(eigenvalues: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = eigenvalues.iter().map(|e| e.max(0.0)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovarianceKind {
    Global,
    Identity,
    PerClusterEev,
}

/// Covariance matrices used row-wise when building Mahalanobis similarity.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    pub kind: CovarianceKind,
    pub matrices: Vec<DMatrix<f64>>,
    /// Index into `matrices` per observation.
    pub assignment: Vec<usize>,
}

impl CovarianceModel {
    pub fn identity(n: usize, d: usize) -> Self {
        Self {
            kind: CovarianceKind::Identity,
            matrices: vec![DMatrix::identity(d, d)],
            assignment: vec![0; n],
        }
    }

    /// Global moment covariance, or identity when it cannot be inverted.
    pub fn global(x: &DataMatrix) -> Self {
        let (_, cov) = covariance(x.rows(), x.ncols());
        if Whitener::new(&cov).is_err() {
            log::warn!("global covariance singular; using identity model");
            return Self::identity(x.nrows(), x.ncols());
        }
        Self {
            kind: CovarianceKind::Global,
            matrices: vec![cov],
            assignment: vec![0; x.nrows()],
        }
    }
}

/// Chooses between global, per-cluster EEV and identity covariance.
pub fn select_covariance_model(x: &DataMatrix, seed: u64) -> CovarianceModel {
    let (n, d) = (x.nrows(), x.ncols());
    let (_, cov) = covariance(x.rows(), d);
    let (eigenvalues, _) = sorted_eigen(&cov);
    if pca_gate(&variance_proportions(&eigenvalues)) == GateOutcome::Pass {
        log::debug!("PCA gate passed on global eigenvalues");
        return CovarianceModel::global(x);
    }
    let fit = match fit_eev(x, &default_k_candidates(n, d), seed) {
        Ok(f) => f,
        Err(e) => {
            log::warn!("EEV fit failed ({e}); using identity model");
            return CovarianceModel::identity(n, d);
        }
    };
    if pca_gate(&variance_proportions(&fit.delta)) == GateOutcome::Fail {
        log::debug!(
            "PCA gate failed on EEV shape (K = {}); using identity model",
            fit.k
        );
        return CovarianceModel::identity(n, d);
    }
    let matrices = fit.covariances();
    if matrices.iter().any(|m| Whitener::new(m).is_err()) {
        log::warn!("EEV covariance not invertible; using identity model");
        return CovarianceModel::identity(n, d);
    }
    CovarianceModel {
        kind: CovarianceKind::PerClusterEev,
        matrices,
        assignment: fit.hard_assignment(),
    }
}

/// Depth with respect to a fixed subset of observations: Mahalanobis with
/// the subset's moment mean and covariance (identity when singular), or
/// spatial depth over the subset.
#[derive(Debug, Clone)]
pub enum SubsetDepth<'a> {
    Mahalanobis {
        mean: Vec<f64>,
        whitener: Whitener,
    },
    Spatial {
        data: &'a DataMatrix,
        members: Vec<usize>,
    },
}

impl<'a> SubsetDepth<'a> {
    pub fn fit(x: &'a DataMatrix, members: &[usize], kind: DepthKind) -> Self {
        match kind {
            DepthKind::Md => {
                let d = x.ncols();
                let (mean, cov) = covariance(members.iter().map(|&i| x.row(i)), d);
                let whitener = if members.len() > d {
                    Whitener::new(&cov).unwrap_or_else(|_| Whitener::identity(d))
                } else {
                    Whitener::identity(d)
                };
                SubsetDepth::Mahalanobis { mean, whitener }
            }
            DepthKind::Sd => SubsetDepth::Spatial {
                data: x,
                members: members.to_vec(),
            },
        }
    }

    pub fn depth(&self, z: &[f64]) -> f64 {
        match self {
            SubsetDepth::Mahalanobis { mean, whitener } => 1.0 / (1.0 + whitener.sq_dist(z, mean)),
            SubsetDepth::Spatial { data, members } => {
                spatial_depth_rows(z, members.iter().map(|&i| data.row(i)), members.len())
            }
        }
    }
}

/// Depth of each member of `members` with respect to the member subset.
pub fn depths_within(x: &DataMatrix, members: &[usize], kind: DepthKind) -> Vec<f64> {
    let model = SubsetDepth::fit(x, members, kind);
    members.iter().map(|&i| model.depth(x.row(i))).collect()
}
