//! Classification of observations left unlabeled by the temporary clusters,
//! and the maxdepth / ifloop refinements.

use crate::data::DataMatrix;
use crate::depth::{DepthKind, SubsetDepth};
use crate::forest::{ForestConfig, RandomForest};
use crate::grouping_min;
use crate::local_centers::CenterContext;
use crate::similarity::SimilarityMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::hash::{DefaultHasher, Hash, Hasher};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Mdc,
    Knn,
    Rf,
}

/// Members of each of `k` clusters among the labeled observations.
pub fn cluster_members(labels: &[Option<usize>], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); k];
    for (i, l) in labels.iter().enumerate() {
        if let Some(c) = l {
            out[*c].push(i);
        }
    }
    out
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// Maximum-depth classifier: each unlabeled observation joins the cluster in
/// which it is deepest, ties to the lowest cluster.
pub fn classify_mdc(
    x: &DataMatrix,
    labels: &[Option<usize>],
    k: usize,
    kind: DepthKind,
) -> Vec<usize> {
    let members = cluster_members(labels, k);
    let models: Vec<SubsetDepth> = members
        .iter()
        .map(|m| SubsetDepth::fit(x, m, kind))
        .collect();
    labels
        .par_iter()
        .enumerate()
        .map(|(i, l)| {
            l.unwrap_or_else(|| {
                let depths: Vec<f64> = models.iter().map(|m| m.depth(x.row(i))).collect();
                argmax_lowest(&depths)
            })
        })
        .collect()
}

/// Majority label among the `knn` most similar labeled observations; ties go
/// to the higher mean similarity, then the lowest label.
pub fn classify_knn(
    sim: &SimilarityMatrix,
    labels: &[Option<usize>],
    k: usize,
    knn: usize,
) -> Vec<usize> {
    let labeled: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_some()).collect();
    let knn = knn.clamp(1, labeled.len().max(1));
    labels
        .par_iter()
        .enumerate()
        .map(|(i, l)| {
            l.unwrap_or_else(|| {
                let row = sim.row(i);
                let mut nn = labeled.clone();
                nn.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
                nn.truncate(knn);
                let mut count = vec![0usize; k];
                let mut total = vec![0.0; k];
                for &j in &nn {
                    let c = labels[j].unwrap();
                    count[c] += 1;
                    total[c] += row[j];
                }
                let mut best = 0;
                for c in 1..k {
                    let better = count[c] > count[best]
                        || (count[c] == count[best]
                            && count[c] > 0
                            && total[c] / count[c] as f64
                                > total[best] / count[best].max(1) as f64);
                    if better {
                        best = c;
                    }
                }
                best
            })
        })
        .collect()
}

/// Random forest trained on the labeled observations.
pub fn classify_rf(
    x: &DataMatrix,
    labels: &[Option<usize>],
    k: usize,
    cfg: &ForestConfig,
) -> Vec<usize> {
    let labeled: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_some()).collect();
    let y: Vec<usize> = labeled.iter().map(|&i| labels[i].unwrap()).collect();
    let distinct: HashSet<usize> = y.iter().copied().collect();
    if distinct.len() < 2 {
        let only = y.first().copied().unwrap_or(0);
        log::warn!("random forest has a single labeled class; assigning it everywhere");
        return labels.iter().map(|l| l.unwrap_or(only)).collect();
    }
    let rows: Vec<&[f64]> = labeled.iter().map(|&i| x.row(i)).collect();
    let rf = RandomForest::fit(&rows, &y, k, cfg);
    labels
        .par_iter()
        .enumerate()
        .map(|(i, l)| l.unwrap_or_else(|| rf.predict(x.row(i))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineStop {
    FixedPoint,
    Cap,
    Cycle,
    EmptyCluster,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub labels: Vec<usize>,
    /// Sweeps that moved at least one observation.
    pub sweeps: usize,
    pub stop: RefineStop,
}

fn label_hash(labels: &[usize]) -> u64 {
    let mut h = DefaultHasher::new();
    labels.hash(&mut h);
    h.finish()
}

/// Moves every observation to the cluster where it is deepest until nothing
/// moves, `cap` sweeps have run, a labeling repeats, or a cluster would
/// empty (that sweep is reverted).
pub fn refine_maxdepth(
    x: &DataMatrix,
    labels: Vec<usize>,
    k: usize,
    kind: DepthKind,
    cap: usize,
) -> RefineOutcome {
    let mut current = labels;
    let mut seen = HashSet::new();
    seen.insert(label_hash(&current));
    let mut sweeps = 0;
    for _ in 0..cap {
        let some: Vec<Option<usize>> = current.iter().map(|&l| Some(l)).collect();
        let members = cluster_members(&some, k);
        let models: Vec<SubsetDepth> = members
            .iter()
            .map(|m| SubsetDepth::fit(x, m, kind))
            .collect();
        let next: Vec<usize> = current
            .par_iter()
            .enumerate()
            .map(|(i, &l)| {
                let depths: Vec<f64> = models.iter().map(|m| m.depth(x.row(i))).collect();
                let best = depths.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if depths[l] == best {
                    l
                } else {
                    argmax_lowest(&depths)
                }
            })
            .collect();
        if next == current {
            return RefineOutcome {
                labels: current,
                sweeps,
                stop: RefineStop::FixedPoint,
            };
        }
        let mut sizes = vec![0usize; k];
        for &l in &next {
            sizes[l] += 1;
        }
        if sizes.contains(&0) {
            log::warn!("maxdepth sweep would empty a cluster; reverting it");
            return RefineOutcome {
                labels: current,
                sweeps,
                stop: RefineStop::EmptyCluster,
            };
        }
        sweeps += 1;
        current = next;
        if !seen.insert(label_hash(&current)) {
            log::warn!("maxdepth revisited a labeling; stopping");
            return RefineOutcome {
                labels: current,
                sweeps,
                stop: RefineStop::Cycle,
            };
        }
    }
    RefineOutcome {
        labels: current,
        sweeps,
        stop: RefineStop::Cap,
    }
}

/// Classification settings shared by the main path and the ifloop.
#[derive(Debug, Clone, Copy)]
pub struct ClassifySettings {
    pub classifier: Classifier,
    pub depth: DepthKind,
    pub knn_k: Option<usize>,
    pub rf: ForestConfig,
    pub maxdepth: bool,
    pub iteration_cap: usize,
}

/// Labels every observation from temporary labels, then optionally applies
/// maxdepth. Returns the labels and the number of maxdepth sweeps.
pub fn complete_labels(
    x: &DataMatrix,
    sim: &SimilarityMatrix,
    temp: &[Option<usize>],
    k: usize,
    cfg: &ClassifySettings,
) -> (Vec<usize>, usize) {
    let labeled = temp.iter().filter(|l| l.is_some()).count();
    let labels = if labeled == temp.len() {
        temp.iter().map(|l| l.unwrap()).collect()
    } else {
        match cfg.classifier {
            Classifier::Mdc => classify_mdc(x, temp, k, cfg.depth),
            Classifier::Knn => {
                let knn = cfg
                    .knn_k
                    .unwrap_or_else(|| (labeled as f64).sqrt().ceil() as usize);
                classify_knn(sim, temp, k, knn)
            }
            Classifier::Rf => classify_rf(x, temp, k, &cfg.rf),
        }
    };
    if cfg.maxdepth && k > 1 {
        let out = refine_maxdepth(x, labels, k, cfg.depth, cfg.iteration_cap);
        (out.labels, out.sweeps)
    } else {
        (labels, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfloopOutcome {
    pub labels: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

/// Rebuilds the clusters from the single deepest filtered center of each
/// cluster until the labeling stops changing or `cap` iterations pass.
pub fn run_ifloop(
    x: &DataMatrix,
    ctx: &CenterContext,
    groups: &[Vec<usize>],
    sim: &SimilarityMatrix,
    labels: Vec<usize>,
    cfg: &ClassifySettings,
) -> IfloopOutcome {
    let k = groups.len();
    let mut current = labels;
    if k < 2 {
        return IfloopOutcome {
            labels: current,
            iterations: 0,
            converged: true,
        };
    }
    let filtered: Vec<usize> = groups.iter().flatten().copied().collect();
    for it in 1..=cfg.iteration_cap {
        let some: Vec<Option<usize>> = current.iter().map(|&l| Some(l)).collect();
        let members = cluster_members(&some, k);
        let reps: Vec<Vec<usize>> = (0..k)
            .map(|c| {
                let mut pool: Vec<usize> = filtered
                    .iter()
                    .copied()
                    .filter(|&id| current[ctx.obs(id)] == c)
                    .collect();
                if pool.is_empty() {
                    pool = groups[c].clone();
                }
                let model = SubsetDepth::fit(x, &members[c], cfg.depth);
                let best = pool
                    .into_iter()
                    .map(|id| (model.depth(x.row(ctx.obs(id))), id))
                    .max_by(|a, b| a.0.total_cmp(&b.0).then(ctx.obs(b.1).cmp(&ctx.obs(a.1))))
                    .unwrap()
                    .1;
                vec![best]
            })
            .collect();
        let temp = grouping_min::temporary_clusters(ctx, &reps, sim);
        let sizes = cluster_members(&temp, k);
        if sizes.iter().any(|m| m.is_empty()) {
            log::warn!("ifloop produced an empty temporary cluster at iteration {it}; stopping");
            return IfloopOutcome {
                labels: current,
                iterations: it,
                converged: false,
            };
        }
        let (next, _) = complete_labels(x, sim, &temp, k, cfg);
        if next == current {
            return IfloopOutcome {
                labels: current,
                iterations: it,
                converged: true,
            };
        }
        current = next;
    }
    log::warn!("ifloop reached the iteration cap without stabilizing");
    IfloopOutcome {
        labels: current,
        iterations: cfg.iteration_cap,
        converged: false,
    }
}
