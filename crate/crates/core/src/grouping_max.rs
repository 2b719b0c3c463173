//! Max strategy: isolated-center removal, segregation of locally non-convex
//! regions, threshold grouping and its hierarchy, and the max score.

use crate::error::{DlccError, Result};
use crate::local_centers::{CenterContext, CenterSimilarity};
use crate::util::UnionFind;
use serde::Serialize;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CenterPartition {
    pub c1: Vec<usize>,
    pub c2: Vec<usize>,
    pub c3: Vec<usize>,
}

fn isolated(m: &CenterSimilarity, c: usize, among: &[usize]) -> bool {
    among.iter().all(|&o| o == c || m.get(c, o) == 0.0)
}

/// Splits center ids `0..m.len()`; `qualifies[c]` marks centers passing the
/// initial rank/frequency filter. Isolated centers land in no set.
pub fn partition_centers(m: &CenterSimilarity, qualifies: &[bool]) -> CenterPartition {
    let all: Vec<usize> = (0..m.len()).collect();
    let mut p = CenterPartition::default();
    for &c in &all {
        if qualifies[c] && !isolated(m, c, &all) {
            p.c1.push(c);
        }
    }
    for &c in &all {
        if p.c1.contains(&c) || isolated(m, c, &all) {
            continue;
        }
        if p.c1.iter().any(|&o| m.get(c, o) > 0.0) {
            p.c3.push(c);
        } else {
            p.c2.push(c);
        }
    }
    p
}

fn max_to(m: &CenterSimilarity, c: usize, set: &[usize]) -> f64 {
    set.iter()
        .map(|&o| m.get(c, o))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Moves `c3` centers that lean toward `c2` into `c2`, evicting the `c1`
/// centers they overlap, and returns the surviving filtered centers.
pub fn segregate_nonconvex(p: &CenterPartition, m: &CenterSimilarity) -> Vec<usize> {
    if p.c2.is_empty() {
        return p.c1.clone();
    }
    let mut c1 = p.c1.clone();
    let mut c2 = p.c2.clone();
    for &v in &p.c3 {
        if max_to(m, v, &c2) > max_to(m, v, &c1) {
            c2.push(v);
            c1.retain(|&i| m.get(v, i) == 0.0);
        }
    }
    let mut all: Vec<usize> = c1.into_iter().chain(c2).collect();
    all.sort_unstable();
    let keep: Vec<usize> = all
        .iter()
        .copied()
        .filter(|&c| !isolated(m, c, &all))
        .collect();
    keep
}

/// Filtered centers for the max strategy.
pub fn filter_max(ctx: &CenterContext) -> Result<(Vec<usize>, CenterPartition)> {
    let qualifies: Vec<bool> = ctx
        .centers
        .iter()
        .map(|c| c.self_rank <= 2 && c.frequency >= 2)
        .collect();
    let part = partition_centers(&ctx.m, &qualifies);
    let centers = segregate_nonconvex(&part, &ctx.m);
    if centers.is_empty() {
        return Err(DlccError::NoCenters { s: ctx.s });
    }
    Ok((centers, part))
}

/// Minimum over centers of their largest off-diagonal similarity.
pub fn delta_upper(m: &CenterSimilarity) -> f64 {
    let t = m.len();
    (0..t)
        .map(|a| {
            (0..t)
                .filter(|&b| b != a)
                .map(|b| m.get(a, b))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Connected components of the graph with edges `M_ab > delta`, each sorted,
/// ordered by smallest member.
pub fn group_at_delta(m: &CenterSimilarity, delta: f64) -> Vec<Vec<usize>> {
    let t = m.len();
    let mut uf = UnionFind::new(t);
    for a in 0..t {
        for b in a + 1..t {
            if m.get(a, b) > delta {
                uf.union(a, b);
            }
        }
    }
    let mut root_group: Vec<Option<usize>> = vec![None; t];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for a in 0..t {
        let r = uf.find(a);
        match root_group[r] {
            Some(g) => groups[g].push(a),
            None => {
                root_group[r] = Some(groups.len());
                groups.push(vec![a]);
            }
        }
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MergeStep {
    pub critical_point: f64,
    pub groups_before: usize,
    pub groups_after: usize,
}

/// Group counts and the thresholds at which they hold: `group_at_delta`
/// at `deltas[m]` yields `group_counts[m]` groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyTrace {
    pub group_counts: Vec<usize>,
    pub deltas: Vec<f64>,
    pub merges: Vec<MergeStep>,
}

impl HierarchyTrace {
    /// The largest threshold giving exactly `k` groups, else the threshold of
    /// the smallest count above `k`, else the finest level.
    pub fn delta_for(&self, k: usize) -> f64 {
        if let Some(m) = self.group_counts.iter().position(|&g| g == k) {
            return self.deltas[m];
        }
        let above = self
            .group_counts
            .iter()
            .enumerate()
            .filter(|(_, &g)| g > k)
            .min_by_key(|(_, &g)| g)
            .map(|(m, _)| m);
        let m = above.unwrap_or(0);
        log::warn!(
            "no threshold yields {k} groups; using {} groups at delta = {}",
            self.group_counts[m],
            self.deltas[m]
        );
        self.deltas[m]
    }
}

/// Single-linkage merge sequence over the distinct positive similarities,
/// from all singletons down to threshold 0.
pub fn hierarchy_trace(m: &CenterSimilarity) -> HierarchyTrace {
    let t = m.len();
    let mut pairs = Vec::new();
    for a in 0..t {
        for b in a + 1..t {
            let v = m.get(a, b);
            if v > 0.0 {
                pairs.push((v, a, b));
            }
        }
    }
    let levels = crate::util::descending_levels(pairs);
    let mut uf = UnionFind::new(t);
    let mut trace = HierarchyTrace {
        group_counts: Vec::new(),
        deltas: Vec::new(),
        merges: Vec::new(),
    };
    for (v, edges) in levels {
        let before = uf.components();
        for (a, b) in edges {
            uf.union(a, b);
        }
        if uf.components() < before {
            trace.group_counts.push(before);
            trace.deltas.push(v);
            trace.merges.push(MergeStep {
                critical_point: v,
                groups_before: before,
                groups_after: uf.components(),
            });
        }
    }
    trace.group_counts.push(uf.components());
    trace.deltas.push(0.0);
    trace
}

/// Fraction of each group's centers whose neighborhood contains `i`.
pub fn score_max(ctx: &CenterContext, i: usize, groups: &[Vec<usize>]) -> Vec<f64> {
    groups
        .iter()
        .map(|g| g.iter().filter(|&&c| ctx.sets[c].contains(i)).count() as f64 / g.len() as f64)
        .collect()
}

/// Unique positive argmax of the max score, else unlabeled.
pub fn temporary_clusters(ctx: &CenterContext, groups: &[Vec<usize>]) -> Vec<Option<usize>> {
    (0..ctx.n)
        .map(|i| {
            let sc = score_max(ctx, i, groups);
            let best = sc.iter().cloned().fold(0.0, f64::max);
            if best <= 0.0 {
                return None;
            }
            let mut winners = sc.iter().enumerate().filter(|(_, &v)| v == best);
            let first = winners.next().map(|(k, _)| k);
            if winners.next().is_some() {
                None
            } else {
                first
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> CenterSimilarity {
        #[rustfmt::skip]
        let v = vec![
            1.0, 0.6, 0.0, 0.0, 0.0, 0.0,
            0.6, 1.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.5, 0.3, 0.2,
            0.0, 0.0, 0.5, 1.0, 0.4, 0.1,
            0.0, 0.0, 0.3, 0.4, 1.0, 0.6,
            0.0, 0.0, 0.2, 0.1, 0.6, 1.0,
        ];
        CenterSimilarity::from_values(6, v)
    }

    #[test]
    fn toy_delta_upper() {
        assert_eq!(delta_upper(&toy()), 0.5);
        assert_eq!(
            delta_upper(&CenterSimilarity::from_values(2, vec![1.0, 0.3, 0.3, 1.0])),
            0.3
        );
    }

    #[test]
    fn toy_groups_at_thresholds() {
        assert_eq!(group_at_delta(&toy(), 0.6).len(), 6);
        assert_eq!(
            group_at_delta(&toy(), 0.45),
            vec![vec![0, 1], vec![2, 3], vec![4, 5]]
        );
        assert_eq!(group_at_delta(&toy(), 1.0).len(), 6);
    }

    #[test]
    fn toy_trace() {
        let tr = hierarchy_trace(&toy());
        assert_eq!(tr.group_counts, vec![6, 4, 3, 2]);
        assert_eq!(tr.deltas, vec![0.6, 0.5, 0.4, 0.0]);
        for (g, d) in tr.group_counts.iter().zip(&tr.deltas) {
            assert_eq!(group_at_delta(&toy(), *d).len(), *g);
        }
        assert_eq!(tr.delta_for(3), 0.4);
    }

    #[test]
    fn identity_trace() {
        let m = CenterSimilarity::from_values(3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let tr = hierarchy_trace(&m);
        assert_eq!(tr.group_counts, vec![3]);
        assert_eq!(tr.deltas, vec![0.0]);
    }

    #[test]
    fn partition_collapses_when_all_qualify() {
        let p = partition_centers(&toy(), &[true; 6]);
        assert_eq!(p.c1, vec![0, 1, 2, 3, 4, 5]);
        assert!(p.c2.is_empty() && p.c3.is_empty());
        assert_eq!(segregate_nonconvex(&p, &toy()), p.c1);
    }

    #[test]
    fn isolated_center_excluded() {
        let m = CenterSimilarity::from_values(3, vec![1.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let p = partition_centers(&m, &[true, true, true]);
        assert_eq!(p.c1, vec![0, 1]);
    }

    #[test]
    fn c3_center_leaning_to_c2_joins_it() {
        // 0,1 in c1; 2 in c3 touching 1 (0.2) and 3 (0.3); 3 in c2
        #[rustfmt::skip]
        let v = vec![
            1.0, 0.5, 0.0, 0.0,
            0.5, 1.0, 0.2, 0.0,
            0.0, 0.2, 1.0, 0.3,
            0.0, 0.0, 0.3, 1.0,
        ];
        let m = CenterSimilarity::from_values(4, v);
        let p = partition_centers(&m, &[true, true, false, false]);
        assert_eq!(
            p,
            CenterPartition {
                c1: vec![0, 1],
                c2: vec![3],
                c3: vec![2]
            }
        );
        // 1 is evicted; 0 becomes isolated from the rest and is dropped
        assert_eq!(segregate_nonconvex(&p, &m), vec![2, 3]);
    }
}
