//! Gaussian mixture under the EEV constraint: common volume `lambda` and
//! shape `delta`, per-component orientation `gammas[k]`, so that
//! `Sigma_k = lambda * Gamma_k * diag(delta) * Gamma_k'`.

use crate::data::DataMatrix;
use crate::error::{DlccError, Result};
use crate::kmeans::kmeans;
use crate::linalg::sorted_eigen;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

const MAX_ITER: usize = 500;
const REL_TOL: f64 = 1e-7;
const BIC_MARGIN: f64 = 2.0;
const MIN_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EevFit {
    pub k: usize,
    pub lambda: f64,
    pub delta: Vec<f64>,
    pub gammas: Vec<DMatrix<f64>>,
    pub means: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Row-major `n x k`.
    pub responsibilities: Vec<f64>,
    pub loglik: f64,
    pub bic: f64,
    /// Log-likelihood after every EM iteration.
    pub loglik_trace: Vec<f64>,
}

impl EevFit {
    pub fn covariances(&self) -> Vec<DMatrix<f64>> {
        let d = self.delta.len();
        let diag = DMatrix::from_diagonal(&DVector::from_column_slice(&self.delta));
        self.gammas
            .iter()
            .map(|g| {
                let s = g * &diag * g.transpose() * self.lambda;
                // enforce exact symmetry
                DMatrix::from_fn(d, d, |a, b| 0.5 * (s[(a, b)] + s[(b, a)]))
            })
            .collect()
    }

    pub fn hard_assignment(&self) -> Vec<usize> {
        self.responsibilities
            .chunks_exact(self.k)
            .map(|row| {
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }

    pub fn n_params(k: usize, d: usize) -> usize {
        k * d + (k - 1) + 1 + (d - 1) + k * d * (d - 1) / 2
    }
}

/// `{1, ..., min(9, floor(n / (5d)))}`, never empty.
pub fn default_k_candidates(n: usize, d: usize) -> Vec<usize> {
    let hi = (n / (5 * d)).clamp(1, 9);
    (1..=hi).collect()
}

/// Fits every admissible candidate and returns the BIC choice, preferring the
/// smallest `K` within 2 BIC units of the best.
pub fn fit_eev(x: &DataMatrix, k_candidates: &[usize], seed: u64) -> Result<EevFit> {
    let (n, d) = (x.nrows(), x.ncols());
    let admissible: Vec<usize> = k_candidates
        .iter()
        .copied()
        .filter(|&k| k >= 1 && n as f64 / k as f64 > d as f64)
        .collect();
    let fits: Vec<EevFit> = admissible
        .par_iter()
        .filter_map(|&k| match fit_one(x, k, seed.wrapping_add(k as u64)) {
            Ok(f) => Some(f),
            Err(e) => {
                log::debug!("EEV candidate K = {k} rejected: {e}");
                None
            }
        })
        .collect();
    let best = fits.iter().map(|f| f.bic).fold(f64::NEG_INFINITY, f64::max);
    fits.into_iter()
        .filter(|f| f.bic >= best - BIC_MARGIN)
        .min_by_key(|f| f.k)
        .ok_or(DlccError::EevDegenerate)
}

struct Params {
    lambda: f64,
    delta: Vec<f64>,
    gammas: Vec<DMatrix<f64>>,
    means: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn fit_one(x: &DataMatrix, k: usize, seed: u64) -> Result<EevFit> {
    let n = x.nrows();
    let init = kmeans(x, k, seed, 100);
    let mut resp = vec![0.0; n * k];
    for (i, &l) in init.labels.iter().enumerate() {
        resp[i * k + l] = 1.0;
    }
    let mut params = m_step(x, &resp, k)?;
    let mut trace = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..MAX_ITER {
        let ll = e_step(x, &params, &mut resp);
        trace.push(ll);
        if prev.is_finite() && (ll - prev).abs() <= REL_TOL * ll.abs().max(1.0) {
            break;
        }
        prev = ll;
        params = m_step(x, &resp, k)?;
    }
    let ll = *trace.last().unwrap();
    let p = EevFit::n_params(k, x.ncols()) as f64;
    Ok(EevFit {
        k,
        lambda: params.lambda,
        delta: params.delta,
        gammas: params.gammas,
        means: params.means,
        weights: params.weights,
        responsibilities: resp,
        loglik: ll,
        bic: 2.0 * ll - p * (n as f64).ln(),
        loglik_trace: trace,
    })
}

fn m_step(x: &DataMatrix, resp: &[f64], k: usize) -> Result<Params> {
    let (n, d) = (x.nrows(), x.ncols());
    let mut weights = vec![0.0; k];
    let mut means = vec![vec![0.0; d]; k];
    for (i, r) in x.rows().enumerate() {
        for c in 0..k {
            let z = resp[i * k + c];
            weights[c] += z;
            for (m, v) in means[c].iter_mut().zip(r) {
                *m += z * v;
            }
        }
    }
    for c in 0..k {
        if weights[c] < 2.0 {
            return Err(DlccError::EevDegenerate);
        }
        means[c].iter_mut().for_each(|m| *m /= weights[c]);
    }
    let mut a = vec![0.0; d];
    let mut gammas = Vec::with_capacity(k);
    for c in 0..k {
        let mut w = DMatrix::zeros(d, d);
        for (i, r) in x.rows().enumerate() {
            let z = resp[i * k + c];
            if z == 0.0 {
                continue;
            }
            let diff = DVector::from_iterator(d, r.iter().zip(&means[c]).map(|(v, m)| v - m));
            w.ger(z, &diff, &diff, 1.0);
        }
        let (omega, l) = sorted_eigen(&w);
        for (acc, o) in a.iter_mut().zip(&omega) {
            *acc += o.max(0.0);
        }
        gammas.push(l);
    }
    let amax = a[0];
    let amin = a[d - 1];
    if !(amin > 0.0) || amin / amax < MIN_RCOND {
        return Err(DlccError::EevDegenerate);
    }
    let log_det = a.iter().map(|v| v.ln()).sum::<f64>() / d as f64;
    let scale = log_det.exp();
    let delta = a.iter().map(|v| v / scale).collect();
    weights.iter_mut().for_each(|w| *w /= n as f64);
    Ok(Params {
        lambda: scale / n as f64,
        delta,
        gammas,
        means,
        weights,
    })
}

/// Updates responsibilities in place and returns the log-likelihood.
fn e_step(x: &DataMatrix, p: &Params, resp: &mut [f64]) -> f64 {
    let d = x.ncols();
    let k = p.weights.len();
    let log_norm =
        -0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * d as f64 * p.lambda.ln();
    let mut ll = 0.0;
    let mut logs = vec![0.0; k];
    for (i, r) in x.rows().enumerate() {
        for c in 0..k {
            let diff = DVector::from_iterator(d, r.iter().zip(&p.means[c]).map(|(v, m)| v - m));
            let proj = p.gammas[c].tr_mul(&diff);
            let q: f64 = proj
                .iter()
                .zip(&p.delta)
                .map(|(y, dl)| y * y / dl)
                .sum::<f64>()
                / p.lambda;
            logs[c] = p.weights[c].ln() + log_norm - 0.5 * q;
        }
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = logs.iter().map(|l| (l - m).exp()).sum();
        let lse = m + s.ln();
        ll += lse;
        for c in 0..k {
            resp[i * k + c] = (logs[c] - lse).exp();
        }
    }
    ll
}
