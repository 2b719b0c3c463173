//! Random forest of axis-aligned Gini trees with bootstrap sampling.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            trees: 200,
            max_features: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(c) => return c,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<Tree>,
    classes: usize,
}

struct Builder<'a> {
    rows: &'a [&'a [f64]],
    y: &'a [usize],
    classes: usize,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best
}

impl Builder<'_> {
    fn build(&mut self, idx: &mut [usize]) -> usize {
        let mut counts = vec![0usize; self.classes];
        for &i in idx.iter() {
            counts[self.y[i]] += 1;
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(majority(&counts)));
        if idx.len() < 2 || counts.iter().filter(|&&c| c > 0).count() < 2 {
            return id;
        }
        let d = self.rows[0].len();
        let features = sample(&mut self.rng, d, self.mtry.min(d));
        let parent = gini(&counts, idx.len());
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<usize> = idx.to_vec();
        for f in features.iter() {
            order.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]).then(a.cmp(&b)));
            let mut left = vec![0usize; self.classes];
            let mut right = counts.clone();
            for p in 0..order.len() - 1 {
                let c = self.y[order[p]];
                left[c] += 1;
                right[c] -= 1;
                let (a, b) = (self.rows[order[p]][f], self.rows[order[p + 1]][f]);
                if a == b {
                    continue;
                }
                let nl = p + 1;
                let nr = order.len() - nl;
                let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr))
                    / order.len() as f64;
                if best.is_none_or(|(bi, _, _)| impurity < bi) {
                    best = Some((impurity, f, 0.5 * (a + b)));
                }
            }
        }
        let Some((impurity, feature, threshold)) = best else {
            return id;
        };
        if impurity >= parent {
            return id;
        }
        let mut split = 0;
        for p in 0..idx.len() {
            if self.rows[idx[p]][feature] <= threshold {
                idx.swap(p, split);
                split += 1;
            }
        }
        let (l, r) = idx.split_at_mut(split);
        let left = self.build(l);
        let right = self.build(r);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

impl RandomForest {
    /// Trains on `rows` with class labels `y` in `0..classes`. Tree `t` draws
    /// from its own stream seeded with `seed + t`.
    pub fn fit(rows: &[&[f64]], y: &[usize], classes: usize, cfg: &ForestConfig) -> Self {
        assert_eq!(rows.len(), y.len());
        assert!(!rows.is_empty(), "random forest needs training rows");
        let d = rows[0].len();
        let mtry = cfg
            .max_features
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .clamp(1, d);
        let trees = (0..cfg.trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(t as u64));
                let mut idx: Vec<usize> = (0..rows.len())
                    .map(|_| rng.random_range(0..rows.len()))
                    .collect();
                let mut b = Builder {
                    rows,
                    y,
                    classes,
                    mtry,
                    rng,
                    nodes: Vec::new(),
                };
                b.build(&mut idx);
                Tree { nodes: b.nodes }
            })
            .collect();
        Self { trees, classes }
    }

    /// Majority vote over trees, ties to the lowest class.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        majority(&votes)
    }
}
