//! Seeded k-means (k-means++ seeding followed by Lloyd iterations).

use crate::data::DataMatrix;
use crate::linalg::sq_euclid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
}

/// Clusters `x` into `k` groups. Identical inputs and seed give identical
/// output.
pub fn kmeans(x: &DataMatrix, k: usize, seed: u64, max_iter: usize) -> KMeans {
    let n = x.nrows();
    let k = k.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = vec![x.row(rng.random_range(0..n)).to_vec()];
    let mut dist: Vec<f64> = x.rows().map(|r| sq_euclid(r, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dist.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(x.row(pick).to_vec());
        let c = centers.last().unwrap();
        for (i, r) in x.rows().enumerate() {
            dist[i] = dist[i].min(sq_euclid(r, c));
        }
    }

    let d = x.ncols();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for (i, r) in x.rows().enumerate() {
            let best = nearest(r, &centers);
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, r) in x.rows().enumerate() {
            counts[labels[i]] += 1;
            for (s, v) in sums[labels[i]].iter_mut().zip(r) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = x
        .rows()
        .zip(&labels)
        .map(|(r, &l)| sq_euclid(r, &centers[l]))
        .sum();
    KMeans {
        labels,
        centers,
        inertia,
    }
}

fn nearest(r: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let dd = sq_euclid(r, center);
        if dd < best_d {
            best_d = dd;
            best = c;
        }
    }
    best
}
