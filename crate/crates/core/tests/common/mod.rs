#![allow(dead_code)]

use dlcc::DataMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(n: usize, d: usize, seed: u64) -> DataMatrix {
    let mut r = rng(seed);
    let v: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut r)).collect();
    DataMatrix::new(v, n, d).unwrap()
}

/// Isotropic blobs around `centers` with `per` points each.
pub fn blobs(centers: &[[f64; 2]], per: usize, sd: f64, seed: u64) -> (DataMatrix, Vec<usize>) {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, sd).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per {
            rows.push([c[0] + noise.sample(&mut r), c[1] + noise.sample(&mut r)]);
            labels.push(k);
        }
    }
    (DataMatrix::from_rows(&rows).unwrap(), labels)
}

pub fn moons(n: usize, sd: f64, seed: u64) -> (DataMatrix, Vec<usize>) {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, sd).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let k = usize::from(i >= n / 2);
        let t = r.random_range(0.0..std::f64::consts::PI);
        let (x, y) = if k == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        rows.push([x + noise.sample(&mut r), y + noise.sample(&mut r)]);
        labels.push(k);
    }
    (DataMatrix::from_rows(&rows).unwrap(), labels)
}

/// Random symmetric matrix with unit diagonal and off-diagonal values drawn
/// from a small grid, so ties occur.
pub fn random_symmetric(n: usize, levels: u32, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
        for j in i + 1..n {
            let x = r.random_range(0..levels) as f64 / levels as f64;
            v[i * n + j] = x;
            v[j * n + i] = x;
        }
    }
    v
}

/// Connected components of the graph `s[a][b] >= t` over `nodes`.
pub fn components_at(s: &dyn Fn(usize, usize) -> f64, nodes: &[usize], t: f64) -> Vec<Vec<usize>> {
    let mut seen = vec![false; nodes.len()];
    let mut out = Vec::new();
    for start in 0..nodes.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut head = 0;
        while head < comp.len() {
            let a = comp[head];
            head += 1;
            for b in 0..nodes.len() {
                if !seen[b] && s(nodes[a], nodes[b]) >= t {
                    seen[b] = true;
                    comp.push(b);
                }
            }
        }
        out.push(comp.into_iter().map(|p| nodes[p]).collect());
    }
    out
}
