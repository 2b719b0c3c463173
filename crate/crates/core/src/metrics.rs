//! Clustering quality: the depth-connection (DC) internal metric and the
//! external ARI and CE scores, plus silhouette and Calinski-Harabasz for
//! comparison.

use crate::data::DataMatrix;
use crate::error::{DlccError, Result};
use crate::linalg::sq_euclid;
use crate::similarity::SimilarityMatrix;
use crate::util::{descending_levels, UnionFind};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Minimum size of a DBCA cluster.
pub const DEFAULT_MIN_CLUSTER: usize = 3;

/// Largest threshold at which the graph `S_ij >= eta` connects all points.
pub fn eta_x(sim: &SimilarityMatrix) -> f64 {
    let n = sim.n();
    if n < 2 {
        return 1.0;
    }
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((sim.get(i, j), i, j));
        }
    }
    let mut uf = UnionFind::new(n);
    for (v, edges) in descending_levels(pairs) {
        for (a, b) in edges {
            uf.union(a, b);
        }
        if uf.components() == 1 {
            return v;
        }
    }
    unreachable!("the complete graph is connected at its smallest value")
}

/// Threshold at which `cluster` decomposes into a single component of at
/// least `min_size` points plus outliers: the top of the band of thresholds,
/// reaching down to the smallest similarity, over which exactly one such
/// component exists. Returns the threshold and the points outside the large
/// component, as indices into `sim`.
pub fn eta_k(
    sim: &SimilarityMatrix,
    cluster: &[usize],
    min_size: usize,
) -> Result<(f64, Vec<usize>)> {
    if min_size < 2 {
        return Err(DlccError::Config(
            "minimum DBCA cluster size must be at least 2".into(),
        ));
    }
    let m = cluster.len();
    if m < min_size {
        return Err(DlccError::ClusterTooSmall {
            cluster: 0,
            size: m,
            min: min_size,
        });
    }
    let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
    for a in 0..m {
        for b in a + 1..m {
            pairs.push((sim.get(cluster[a], cluster[b]), a, b));
        }
    }
    let mut uf = UnionFind::new(m);
    let mut large = 0usize;
    let mut found: Option<(f64, Vec<usize>)> = None;
    for (v, edges) in descending_levels(pairs) {
        for (a, b) in edges {
            let (sa, sb) = (uf.size_of(a), uf.size_of(b));
            if uf.union(a, b).is_some() {
                large -= usize::from(sa >= min_size) + usize::from(sb >= min_size);
                large += usize::from(sa + sb >= min_size);
            }
        }
        if large != 1 {
            found = None;
        } else if found.is_none() {
            let root = (0..m)
                .find(|&a| uf.size_of(a) >= min_size)
                .expect("one large component");
            let root = uf.find(root);
            let outliers = (0..m)
                .filter(|&a| uf.find(a) != root)
                .map(|a| cluster[a])
                .collect();
            found = Some((v, outliers));
        }
    }
    found.ok_or(DlccError::ClusterTooSmall {
        cluster: 0,
        size: m,
        min: min_size,
    })
}

/// Within-cluster similarity `J_k` for `cluster` given its `eta_k` and
/// outliers.
pub fn dc_within(sim: &SimilarityMatrix, cluster: &[usize], eta_k: f64, outliers: &[usize]) -> f64 {
    let is_out = |i: usize| outliers.contains(&i);
    let core: Vec<usize> = cluster.iter().copied().filter(|&i| !is_out(i)).collect();
    let mut num = 0.0;
    let mut denom = outliers.len() as f64;
    for &i in &core {
        let (mut cnt, mut sum) = (0usize, 0.0);
        for &j in cluster {
            let v = sim.get(i, j);
            if j != i && v >= eta_k {
                cnt += 1;
                sum += v;
            }
        }
        // |J_i| * mean(J_i)
        num += sum;
        denom += cnt as f64;
    }
    for &i in outliers {
        num += core
            .iter()
            .map(|&j| sim.get(i, j))
            .fold(f64::NEG_INFINITY, f64::max);
    }
    num / denom
}

/// Points of `cluster` with no outside similarity reaching `eta_x`.
pub fn inner_points(
    sim: &SimilarityMatrix,
    cluster: &[usize],
    in_cluster: &[bool],
    eta_x: f64,
) -> Vec<usize> {
    cluster
        .iter()
        .copied()
        .filter(|&i| (0..sim.n()).all(|h| in_cluster[h] || sim.get(i, h) < eta_x))
        .collect()
}

/// Between-cluster similarity `H_k`; `in_cluster` marks the members of
/// `cluster` over all points.
pub fn dc_between(
    sim: &SimilarityMatrix,
    cluster: &[usize],
    in_cluster: &[bool],
    eta_x: f64,
) -> f64 {
    // accumulated as excess over eta_x, so inner points contribute exactly 0
    let mut excess = 0.0;
    let mut denom = 0.0;
    for &i in cluster {
        let (mut cnt, mut sum, mut touches) = (0usize, 0.0, false);
        for h in (0..sim.n()).filter(|&h| !in_cluster[h]) {
            let v = sim.get(i, h);
            touches |= v >= eta_x;
            if v > eta_x {
                cnt += 1;
                sum += v - eta_x;
            }
        }
        if touches {
            excess += sum;
            denom += cnt as f64;
        } else {
            denom += 1.0;
        }
    }
    if denom == 0.0 {
        eta_x
    } else {
        eta_x + excess / denom
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterDc {
    pub label: usize,
    pub size: usize,
    pub eta_k: f64,
    pub within: f64,
    pub between: f64,
    pub outliers: Vec<usize>,
    pub inner: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcReport {
    pub dc: f64,
    pub eta_x: f64,
    pub clusters: Vec<ClusterDc>,
}

fn clusters_of(labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        map.entry(l).or_default().push(i);
    }
    map
}

/// DC metric of `labels` over the symmetric similarity `sim`.
pub fn dc_metric(sim: &SimilarityMatrix, labels: &[usize], min_size: usize) -> Result<DcReport> {
    let n = sim.n();
    if labels.len() != n {
        return Err(DlccError::InvalidData(format!(
            "{} labels for {n} observations",
            labels.len()
        )));
    }
    if n < 2 {
        return Err(DlccError::InvalidData(
            "DC needs at least two observations".into(),
        ));
    }
    let clusters = clusters_of(labels);
    for (&label, members) in &clusters {
        if members.len() < min_size {
            return Err(DlccError::ClusterTooSmall {
                cluster: label,
                size: members.len(),
                min: min_size,
            });
        }
    }
    let ex = eta_x(sim);
    let clusters: Vec<(usize, Vec<usize>)> = clusters.into_iter().collect();
    let per: Vec<ClusterDc> = clusters
        .par_iter()
        .map(|(label, members)| {
            let (ek, outliers) = eta_k(sim, members, min_size).map_err(|e| match e {
                DlccError::ClusterTooSmall { size, min, .. } => DlccError::ClusterTooSmall {
                    cluster: *label,
                    size,
                    min,
                },
                other => other,
            })?;
            let mut in_cluster = vec![false; n];
            for &i in members {
                in_cluster[i] = true;
            }
            let within = dc_within(sim, members, ek, &outliers);
            let between = dc_between(sim, members, &in_cluster, ex);
            let inner = inner_points(sim, members, &in_cluster, ex);
            for &o in &outliers {
                let mu = members
                    .iter()
                    .filter(|j| !outliers.contains(j))
                    .map(|&j| sim.get(o, j))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(
                    mu < ek,
                    "outlier {o} has similarity {mu} to the core at eta_k = {ek}"
                );
            }
            assert!(
                between >= ex,
                "between-cluster similarity {between} below eta_x = {ex}"
            );
            Ok(ClusterDc {
                label: *label,
                size: members.len(),
                eta_k: ek,
                within,
                between,
                outliers,
                inner,
            })
        })
        .collect::<Result<_>>()?;
    let dc = per
        .iter()
        .map(|c| c.size as f64 / n as f64 * (c.within - c.between))
        .sum();
    Ok(DcReport {
        dc,
        eta_x: ex,
        clusters: per,
    })
}

/// Counts of predicted (rows) against true (columns) labels; labels are
/// indexed in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<usize>,
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Self {
        assert_eq!(pred.len(), truth.len(), "label vectors differ in length");
        let index = |l: &[usize]| {
            let mut u: Vec<usize> = l.to_vec();
            u.sort_unstable();
            u.dedup();
            u
        };
        let (pu, tu) = (index(pred), index(truth));
        let mut counts = vec![0usize; pu.len() * tu.len()];
        for (p, t) in pred.iter().zip(truth) {
            let r = pu.binary_search(p).unwrap();
            let c = tu.binary_search(t).unwrap();
            counts[r * tu.len() + c] += 1;
        }
        Self {
            rows: pu.len(),
            cols: tu.len(),
            counts,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> usize {
        self.counts[r * self.cols + c]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

fn pairs(m: usize) -> f64 {
    let m = m as f64;
    m * (m - 1.0) / 2.0
}

/// Adjusted Rand index.
pub fn ari(pred: &[usize], truth: &[usize]) -> f64 {
    let t = ContingencyTable::new(pred, truth);
    let n = t.total();
    let index: f64 = t.counts.iter().map(|&c| pairs(c)).sum();
    let a: f64 = (0..t.rows)
        .map(|r| pairs((0..t.cols).map(|c| t.get(r, c)).sum()))
        .sum();
    let b: f64 = (0..t.cols)
        .map(|c| pairs((0..t.rows).map(|r| t.get(r, c)).sum()))
        .sum();
    let total = pairs(n);
    if total == 0.0 {
        return 1.0;
    }
    // scaled by `total` so integer counts stay exact
    let num = index * total - a * b;
    let den = 0.5 * (a + b) * total - a * b;
    if den == 0.0 {
        return 1.0;
    }
    num / den
}

/// Minimum-cost perfect assignment on a square `n x n` cost matrix
/// (Hungarian algorithm with potentials). Returns the column of every row.
fn min_cost_assignment(n: usize, cost: &[f64]) -> Vec<usize> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Classification error: one minus the accuracy of the best one-to-one
/// matching of predicted to true labels.
pub fn ce(pred: &[usize], truth: &[usize]) -> f64 {
    let t = ContingencyTable::new(pred, truth);
    let n = t.total();
    if n == 0 {
        return 0.0;
    }
    let k = t.rows.max(t.cols);
    let mut cost = vec![0.0; k * k];
    for r in 0..t.rows {
        for c in 0..t.cols {
            cost[r * k + c] = -(t.get(r, c) as f64);
        }
    }
    let assign = min_cost_assignment(k, &cost);
    let matched: usize = (0..t.rows)
        .filter(|&r| assign[r] < t.cols)
        .map(|r| t.get(r, assign[r]))
        .sum();
    1.0 - matched as f64 / n as f64
}

/// Mean silhouette width under Euclidean distance. Points in singleton
/// clusters score 0.
pub fn silhouette(x: &DataMatrix, labels: &[usize]) -> f64 {
    let n = x.nrows();
    let clusters = clusters_of(labels);
    if clusters.len() < 2 {
        return 0.0;
    }
    let ids: Vec<usize> = clusters.keys().copied().collect();
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if clusters[&own].len() == 1 {
                return 0.0;
            }
            let mut a = 0.0;
            let mut b = f64::INFINITY;
            for &c in &ids {
                let members = &clusters[&c];
                let sum: f64 = members
                    .iter()
                    .map(|&j| sq_euclid(x.row(i), x.row(j)).sqrt())
                    .sum();
                if c == own {
                    a = sum / (members.len() - 1) as f64;
                } else {
                    b = b.min(sum / members.len() as f64);
                }
            }
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .sum();
    total / n as f64
}

/// Calinski-Harabasz variance ratio.
pub fn calinski_harabasz(x: &DataMatrix, labels: &[usize]) -> f64 {
    let n = x.nrows();
    let d = x.ncols();
    let clusters = clusters_of(labels);
    let k = clusters.len();
    if k < 2 || k >= n {
        return 0.0;
    }
    let mean = x.column_means();
    let mut between = 0.0;
    let mut within = 0.0;
    for members in clusters.values() {
        let mut c = vec![0.0; d];
        for &i in members {
            for (cj, v) in c.iter_mut().zip(x.row(i)) {
                *cj += v;
            }
        }
        c.iter_mut().for_each(|v| *v /= members.len() as f64);
        between += members.len() as f64 * sq_euclid(&c, &mean);
        within += members
            .iter()
            .map(|&i| sq_euclid(x.row(i), &c))
            .sum::<f64>();
    }
    if within == 0.0 {
        return f64::INFINITY;
    }
    (between / (k - 1) as f64) / (within / (n - k) as f64)
}
