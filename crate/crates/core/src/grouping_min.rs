//! Min strategy: local-depth grouping, frequency-cutoff filtering, group
//! trimming, the min score and the temporary-cluster update.

use crate::error::{DlccError, Result};
use crate::local_centers::CenterContext;
use crate::similarity::SimilarityMatrix;
use crate::util::BitSet;
use serde::{Deserialize, Serialize};

/// Clamp interval for the per-center similarity threshold of the grouping
/// step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRange {
    pub lo: f64,
    pub hi: f64,
}

impl Default for ThresholdRange {
    fn default() -> Self {
        Self { lo: 0.4, hi: 0.75 }
    }
}

/// Partition of center ids into groups, with one stable center per group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    pub groups: Vec<Vec<usize>>,
    pub stable: Vec<usize>,
}

impl Grouping {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn centers(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.groups.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    fn remove_centers(&mut self, drop: &[usize]) {
        for g in &mut self.groups {
            g.retain(|c| !drop.contains(c));
        }
    }

    /// Removes empty groups, failing when a target group count is set.
    fn prune_empty(&mut self, k: Option<usize>) -> Result<()> {
        if let Some(pos) = self.groups.iter().position(|g| g.is_empty()) {
            if let Some(k) = k {
                return Err(DlccError::UnsatisfiableK {
                    k,
                    reason: format!("group {} lost all of its centers during trimming", pos + 1),
                });
            }
        }
        let mut i = 0;
        while i < self.groups.len() {
            if self.groups[i].is_empty() {
                self.groups.remove(i);
                self.stable.remove(i);
            } else {
                i += 1;
            }
        }
        Ok(())
    }
}

fn cmp_obs(ctx: &CenterContext, a: usize, b: usize) -> std::cmp::Ordering {
    ctx.obs(a).cmp(&ctx.obs(b))
}

/// Most similar center in `pool` to `c` under `M`, ties to the lowest
/// observation index.
fn most_similar(ctx: &CenterContext, c: usize, pool: impl Iterator<Item = usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for p in pool {
        best = match best {
            None => Some(p),
            Some(b) => {
                let (vp, vb) = (ctx.m(c, p), ctx.m(c, b));
                if vp > vb || (vp == vb && cmp_obs(ctx, p, b).is_lt()) {
                    Some(p)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Groups `ids` (center ids in frequency order) by local depth and
/// neighborhood overlap.
pub fn group_by_local_depth(ctx: &CenterContext, ids: &[usize], range: ThresholdRange) -> Grouping {
    assert!(!ids.is_empty(), "grouping needs at least one center");
    let mut id_of_obs = vec![usize::MAX; ctx.n];
    for &id in ids {
        id_of_obs[ctx.obs(id)] = id;
    }
    let half = (ctx.s / 2).min(ctx.s - 1);
    let valid: Vec<Vec<usize>> = ids
        .iter()
        .map(|&t| {
            ctx.members(t)[1..=half]
                .iter()
                .map(|&o| id_of_obs[o])
                .filter(|&id| id != usize::MAX && id != t)
                .collect()
        })
        .collect();
    let ms: Vec<f64> = ids
        .iter()
        .zip(&valid)
        .map(|(&t, vn)| {
            if vn.is_empty() {
                0.0
            } else {
                vn.iter().map(|&j| ctx.m(t, j)).sum::<f64>() / vn.len() as f64
            }
        })
        .collect();
    let pos_of = |id: usize| ids.iter().position(|&x| x == id).unwrap();
    let mut stable = Vec::new();
    for (p, &t) in ids.iter().enumerate() {
        let cn = most_similar(ctx, t, ids.iter().copied().filter(|&j| j != t)).unwrap_or(t);
        let delta = ms[p].min(ms[pos_of(cn)]).clamp(range.lo, range.hi);
        let ld = ctx.centers[t].local_depth;
        if valid[p]
            .iter()
            .filter(|&&j| ctx.m(t, j) >= delta)
            .all(|&j| ctx.centers[j].local_depth < ld)
        {
            stable.push(t);
        }
    }
    if stable.is_empty() {
        let top = ids
            .iter()
            .copied()
            .max_by(|&a, &b| {
                ctx.centers[a]
                    .local_depth
                    .total_cmp(&ctx.centers[b].local_depth)
                    .then(cmp_obs(ctx, b, a))
            })
            .unwrap();
        log::info!(
            "no stable center found; promoting the deepest center (observation {})",
            ctx.obs(top)
        );
        stable.push(top);
    }
    attach(ctx, ids, stable)
}

/// Groups formed by attaching every non-stable id to its most similar stable
/// center.
fn attach(ctx: &CenterContext, ids: &[usize], stable: Vec<usize>) -> Grouping {
    let mut groups: Vec<Vec<usize>> = stable.iter().map(|&s| vec![s]).collect();
    for &c in ids {
        if stable.contains(&c) {
            continue;
        }
        let target = most_similar(ctx, c, stable.iter().copied()).unwrap();
        let g = stable.iter().position(|&s| s == target).unwrap();
        groups[g].push(c);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    Grouping { groups, stable }
}

/// Per-center outcome of the two min-strategy inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinCheck {
    pub id: usize,
    pub mw: f64,
    pub mb: f64,
    pub within_max: f64,
    pub outside_max: f64,
}

impl MinCheck {
    pub fn violates_first(&self) -> bool {
        !(self.mw > self.mb)
    }

    pub fn violates_second(&self) -> bool {
        !(self.within_max > self.outside_max)
    }

    pub fn violates(&self) -> bool {
        self.violates_first() || self.violates_second()
    }
}

/// Evaluates both inequalities for every grouped center, group by group.
/// A singleton group has no within-group maximum and never violates the
/// second inequality; with no other groups the cross terms are `-inf`.
pub fn min_checks(ctx: &CenterContext, groups: &[Vec<usize>]) -> Vec<Vec<MinCheck>> {
    groups
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            g.iter()
                .map(|&c| {
                    let mw = g.iter().map(|&o| ctx.m(c, o)).fold(f64::INFINITY, f64::min);
                    let mut mb = f64::NEG_INFINITY;
                    let mut outside_max = f64::NEG_INFINITY;
                    for (gj, other) in groups.iter().enumerate() {
                        if gj == gi || other.is_empty() {
                            continue;
                        }
                        let mut mn = f64::INFINITY;
                        for &o in other {
                            let v = ctx.m(c, o);
                            mn = mn.min(v);
                            outside_max = outside_max.max(v);
                        }
                        mb = mb.max(mn);
                    }
                    let within_max = if g.len() == 1 {
                        f64::INFINITY
                    } else {
                        g.iter()
                            .filter(|&&o| o != c)
                            .map(|&o| ctx.m(c, o))
                            .fold(f64::NEG_INFINITY, f64::max)
                    };
                    MinCheck {
                        id: c,
                        mw,
                        mb,
                        within_max,
                        outside_max,
                    }
                })
                .collect()
        })
        .collect()
}

/// Count of centers violating either inequality.
pub fn bad_points(ctx: &CenterContext, groups: &[Vec<usize>]) -> usize {
    min_checks(ctx, groups)
        .iter()
        .flatten()
        .filter(|c| c.violates())
        .count()
}

/// Neighbors of each group's centers that no other group's centers reach.
pub fn unique_neighbors(ctx: &CenterContext, groups: &[Vec<usize>]) -> Vec<BitSet> {
    let unions: Vec<BitSet> = groups.iter().map(|g| ctx.union(g)).collect();
    (0..groups.len())
        .map(|gi| {
            let mut u = unions[gi].clone();
            for (gj, other) in unions.iter().enumerate() {
                if gj != gi {
                    u.difference_with(other);
                }
            }
            u
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FilterBranch {
    /// Cumulative proportion of the initial centers reached 0.75.
    FrequencyCutoff,
    /// Low coverage: dissimilarity check followed by greedy coverage repair.
    CoverageRepair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinFilter {
    pub centers: Vec<usize>,
    pub branch: FilterBranch,
    /// Cumulative proportion of the initial centers.
    pub initial_coverage: f64,
}

/// Selects the filtered centers for the min strategy.
pub fn filter_min(ctx: &CenterContext, range: ThresholdRange) -> Result<MinFilter> {
    let initial = ctx.initial_filter();
    if initial.is_empty() {
        return Err(DlccError::NoCenters { s: ctx.s });
    }
    let cover = *ctx.cumulative_proportion(&initial).last().unwrap();
    let (centers, branch) = if cover >= 0.75 {
        (
            frequency_cutoff(ctx, &initial, range)?,
            FilterBranch::FrequencyCutoff,
        )
    } else {
        (
            coverage_repair(ctx, &initial, range),
            FilterBranch::CoverageRepair,
        )
    };
    if centers.is_empty() {
        return Err(DlccError::NoCenters { s: ctx.s });
    }
    Ok(MinFilter {
        centers,
        branch,
        initial_coverage: cover,
    })
}

fn frequency_cutoff(
    ctx: &CenterContext,
    initial: &[usize],
    range: ThresholdRange,
) -> Result<Vec<usize>> {
    let mut grouping = group_by_local_depth(ctx, initial, range);
    loop {
        let uniq = unique_neighbors(ctx, &grouping.groups);
        let small = uniq
            .iter()
            .enumerate()
            .filter(|(_, u)| (u.count() as f64) < ctx.s as f64 / 10.0)
            .min_by_key(|(gi, u)| (u.count(), *gi))
            .map(|(gi, _)| gi);
        let Some(di) = small else { break };
        let dropped = grouping.groups[di].clone();
        let mut delta = f64::NEG_INFINITY;
        for &a in &dropped {
            for &b in &dropped {
                if a != b {
                    delta = delta.max(ctx.m(a, b));
                }
            }
        }
        if delta == f64::NEG_INFINITY {
            // singleton group: only identical neighborhoods count as near-duplicates
            delta = 1.0;
        }
        let mut drop = dropped.clone();
        for (gj, g) in grouping.groups.iter().enumerate() {
            if gj == di {
                continue;
            }
            for &v in g {
                if dropped
                    .iter()
                    .map(|&i| ctx.m(v, i))
                    .fold(f64::NEG_INFINITY, f64::max)
                    >= delta
                {
                    drop.push(v);
                }
            }
        }
        log::debug!(
            "dropping {} centers around a group with {} unique neighbors",
            drop.len(),
            uniq[di].count()
        );
        grouping.remove_centers(&drop);
        grouping.prune_empty(None)?;
        if grouping.is_empty() {
            return Err(DlccError::NoCenters { s: ctx.s });
        }
    }

    // reindex the surviving centers in frequency order
    let order = grouping.centers();
    let group_of = |c: usize| grouping.groups.iter().position(|g| g.contains(&c)).unwrap();
    let tt = order.len();
    let cover = ctx.cumulative_proportion(&order);
    let reach = cover.iter().position(|&p| p >= 0.75).unwrap_or(tt - 1);
    let first_of_groups = grouping
        .groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|c| order.iter().position(|o| o == c).unwrap())
                .min()
                .unwrap()
        })
        .max()
        .unwrap();
    let cc1 = reach.max(first_of_groups);
    let labels: Vec<usize> = order.iter().map(|&c| group_of(c)).collect();

    let mut candidates = vec![cc1];
    for i in cc1 + 1..tt {
        let gi = labels[i];
        let same: Vec<usize> = (0..=i).filter(|&j| labels[j] == gi).collect();
        let within_sum = |l: usize| -> f64 {
            same.iter()
                .filter(|&&j| j != l)
                .map(|&j| ctx.m(order[l], order[j]))
                .sum()
        };
        let own = within_sum(i);
        let least_similar = same.iter().all(|&l| own <= within_sum(l));
        let outside: Vec<usize> = (0..i).filter(|&v| labels[v] != gi).collect();
        let max_out = |l: usize| -> f64 {
            outside
                .iter()
                .map(|&v| ctx.m(order[l], order[v]))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let bound = same
            .iter()
            .filter(|&&j| j < i)
            .map(|&j| max_out(j))
            .fold(f64::INFINITY, f64::min);
        if least_similar && max_out(i) <= bound {
            candidates.push(i);
        }
    }

    let bp: Vec<usize> = candidates
        .iter()
        .map(|&cc| {
            let groups: Vec<Vec<usize>> = grouping
                .groups
                .iter()
                .map(|g| {
                    g.iter()
                        .copied()
                        .filter(|c| order.iter().position(|o| o == c).unwrap() <= cc)
                        .collect::<Vec<_>>()
                })
                .filter(|g: &Vec<usize>| !g.is_empty())
                .collect();
            bad_points(ctx, &groups)
        })
        .collect();
    let p = (0..candidates.len().saturating_sub(1))
        .find(|&p| bp[p + 1] as i64 - bp[p] as i64 > 1)
        .unwrap_or(candidates.len() - 1);
    log::debug!(
        "cutoff candidates {candidates:?}, bad points {bp:?}, chosen {}",
        candidates[p]
    );
    Ok(order[..=candidates[p]].to_vec())
}

fn coverage_repair(ctx: &CenterContext, initial: &[usize], range: ThresholdRange) -> Vec<usize> {
    let grouping = group_by_local_depth(ctx, initial, range);
    let mut kept = Vec::new();
    for (gi, g) in grouping.groups.iter().enumerate() {
        for &c in g {
            let within = if g.len() == 1 {
                1.0
            } else {
                g.iter()
                    .filter(|&&o| o != c)
                    .map(|&o| ctx.m(c, o))
                    .sum::<f64>()
                    / (g.len() - 1) as f64
            };
            let outside = grouping
                .groups
                .iter()
                .enumerate()
                .filter(|(gj, _)| *gj != gi)
                .flat_map(|(_, o)| o.iter())
                .map(|&o| ctx.m(c, o))
                .fold(f64::NEG_INFINITY, f64::max);
            if within - outside > 0.0 {
                kept.push(c);
            }
        }
    }
    kept.sort_unstable();
    let all: Vec<usize> = (0..ctx.len()).collect();
    let target = 0.9 * ctx.union(&all).count() as f64;
    let mut covered = ctx.union(&kept);
    while (covered.count() as f64) < target {
        let base = covered.count();
        let best = all
            .iter()
            .copied()
            .filter(|c| !kept.contains(c))
            .map(|c| (covered.union_count(&ctx.sets[c]) - base, c))
            .max_by(|a, b| a.0.cmp(&b.0).then(cmp_obs(ctx, b.1, a.1)));
        match best {
            Some((gain, c)) if gain > 0 => {
                kept.push(c);
                covered.union_with(&ctx.sets[c]);
            }
            _ => break,
        }
    }
    kept.sort_unstable();
    kept
}

/// Enforces both min-strategy inequalities, optionally forcing `k` groups.
pub fn trim_groups(
    ctx: &CenterContext,
    mut grouping: Grouping,
    k: Option<usize>,
) -> Result<Grouping> {
    if let Some(k) = k {
        if k == 0 {
            return Err(DlccError::Config("K must be at least 1".into()));
        }
        while grouping.len() > k {
            let (gi, _) = grouping
                .groups
                .iter()
                .enumerate()
                .map(|(gi, g)| (gi, *g.iter().min().unwrap()))
                .max_by_key(|&(_, first)| first)
                .unwrap();
            grouping.groups.remove(gi);
            grouping.stable.remove(gi);
        }
        if grouping.len() < k {
            let ids = grouping.centers();
            let mut stable = grouping.stable.clone();
            while stable.len() < k {
                let pick = ids
                    .iter()
                    .copied()
                    .filter(|c| !stable.contains(c))
                    .map(|c| {
                        let closest = stable.iter().map(|&st| ctx.m(c, st)).fold(0.0, f64::max);
                        (ctx.centers[c].local_depth * (1.0 - closest), c)
                    })
                    .max_by(|a, b| a.0.total_cmp(&b.0).then(cmp_obs(ctx, b.1, a.1)));
                let Some((_, c)) = pick else {
                    return Err(DlccError::UnsatisfiableK {
                        k,
                        reason: format!("only {} filtered centers available", ids.len()),
                    });
                };
                log::info!(
                    "promoting observation {} to a new stable center",
                    ctx.obs(c)
                );
                stable.push(c);
            }
            stable.sort_unstable();
            grouping = attach(ctx, &ids, stable);
        }
    }

    loop {
        loop {
            let checks = min_checks(ctx, &grouping.groups);
            let violating: Vec<usize> = checks
                .iter()
                .enumerate()
                .filter(|(_, g)| g.iter().any(|c| c.violates_first()))
                .map(|(gi, _)| gi)
                .collect();
            if violating.is_empty() {
                break;
            }
            let mut drop = Vec::new();
            for gi in violating {
                let g = &grouping.groups[gi];
                if g.len() == 1 {
                    drop.push(g[0]);
                    continue;
                }
                let mut best: Option<(f64, usize)> = None;
                for &c in g {
                    let mut trial = grouping.groups.clone();
                    trial[gi].retain(|&o| o != c);
                    let after = min_checks(ctx, &trial);
                    let mean =
                        after[gi].iter().map(|m| m.mw - m.mb).sum::<f64>() / after[gi].len() as f64;
                    best = match best {
                        Some((bv, bc))
                            if bv > mean || (bv == mean && cmp_obs(ctx, bc, c).is_lt()) =>
                        {
                            Some((bv, bc))
                        }
                        _ => Some((mean, c)),
                    };
                }
                drop.push(best.unwrap().1);
            }
            grouping.remove_centers(&drop);
            grouping.prune_empty(k)?;
        }
        let second: Vec<usize> = min_checks(ctx, &grouping.groups)
            .iter()
            .flatten()
            .filter(|c| c.violates_second())
            .map(|c| c.id)
            .collect();
        if second.is_empty() {
            break;
        }
        grouping.remove_centers(&second);
        grouping.prune_empty(k)?;
    }
    if grouping.is_empty() {
        return Err(DlccError::NoCenters { s: ctx.s });
    }
    for (g, st) in grouping.groups.iter().zip(grouping.stable.iter_mut()) {
        if !g.contains(st) {
            *st = g[0];
        }
    }
    Ok(grouping)
}

/// `(a - b) / max(a, b)`, zero when both vanish.
pub fn min_score(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m <= 0.0 {
        0.0
    } else {
        (a - b) / m
    }
}

/// Score of observation `i` toward every group, where `groups` lists the
/// observation indices of each group's filtered centers.
pub fn score_min(i: usize, groups: &[Vec<usize>], sim: &SimilarityMatrix) -> Vec<f64> {
    let best: Vec<f64> = groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|&j| sim.get(j, i))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    (0..groups.len())
        .map(|k| {
            let other = best
                .iter()
                .enumerate()
                .filter(|(z, _)| *z != k)
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            min_score(best[k], other.max(0.0))
        })
        .collect()
}

/// Accepted and deferred `(observation, score)` pools, per cluster.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScorePools {
    pub accepted: Vec<Vec<(usize, f64)>>,
    pub deferred: Vec<Vec<(usize, f64)>>,
}

impl ScorePools {
    /// Accepted pools start from the unique neighbors of each group; deferred
    /// pools hold the remaining observations with a positive score.
    pub fn initial(unique: &[BitSet], scores: &[Vec<f64>]) -> Self {
        let k = unique.len();
        let mut accepted = vec![Vec::new(); k];
        let mut deferred = vec![Vec::new(); k];
        for (i, sc) in scores.iter().enumerate() {
            for c in 0..k {
                if unique[c].contains(i) {
                    accepted[c].push((i, sc[c]));
                } else if sc[c] > 0.0 {
                    deferred[c].push((i, sc[c]));
                }
            }
        }
        Self { accepted, deferred }
    }

    /// Temporary labels: accepted observations get their cluster.
    pub fn labels(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (c, pool) in self.accepted.iter().enumerate() {
            for &(i, _) in pool {
                out[i] = Some(c);
            }
        }
        out
    }
}

/// Linear-interpolation quantile of unsorted values at `level` in `[0, 1]`.
pub fn quantile(values: &[f64], level: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let h = (v.len() - 1) as f64 * level.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Demotes weak accepted observations and promotes strong deferred ones.
/// All demotions happen before any promotion, and an observation already
/// accepted by another cluster is never promoted.
pub fn update_temporary_clusters(mut pools: ScorePools, s: usize) -> ScorePools {
    let k = pools.accepted.len();
    for c in 0..k {
        if pools.deferred[c].is_empty() {
            continue;
        }
        let gamma1 =
            pools.deferred[c].iter().map(|p| p.1).sum::<f64>() / pools.deferred[c].len() as f64;
        let (keep, demote): (Vec<_>, Vec<_>) =
            pools.accepted[c].iter().partition(|p| p.1 >= gamma1);
        pools.accepted[c] = keep;
        pools.deferred[c].extend(demote);
    }
    let mut owner: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for (c, pool) in pools.accepted.iter().enumerate() {
        for &(i, _) in pool {
            owner.insert(i, c);
        }
    }
    let half = s as f64 / 2.0;
    for c in 0..k {
        let mut ss: Vec<f64> = pools.accepted[c].iter().map(|p| p.1).collect();
        ss.sort_by(|a, b| b.total_cmp(a));
        let b = ss.len();
        let gap_term = if b == 0 {
            None
        } else {
            // 1-based gap positions floor(B/2) ..= B-1
            let lo = (b / 2).max(1);
            let mut idx = b;
            let mut best = f64::NEG_INFINITY;
            for j in lo..b {
                let gap = ss[j - 1] - ss[j];
                if gap > best {
                    best = gap;
                    idx = j;
                }
            }
            Some(ss[idx - 1])
        };
        let b_hat = pools.deferred[c].len();
        let quantile_term = if half - (b as f64) > 0.0 && b_hat > 0 {
            let scores: Vec<f64> = pools.deferred[c].iter().map(|p| p.1).collect();
            Some(quantile(&scores, 1.0 - (half - b as f64) / b_hat as f64))
        } else {
            None
        };
        let gamma2 = match (gap_term, quantile_term) {
            (Some(a), Some(q)) => a.min(q),
            (Some(a), None) => a,
            (None, Some(q)) => q,
            (None, None) => continue,
        };
        let deferred = std::mem::take(&mut pools.deferred[c]);
        for (i, sc) in deferred {
            if sc > gamma2 && !owner.contains_key(&i) {
                owner.insert(i, c);
                pools.accepted[c].push((i, sc));
            } else {
                pools.deferred[c].push((i, sc));
            }
        }
    }
    pools
}

/// Temporary clusters for the min strategy from a final grouping.
pub fn temporary_clusters(
    ctx: &CenterContext,
    groups: &[Vec<usize>],
    sim: &SimilarityMatrix,
) -> Vec<Option<usize>> {
    let obs_groups: Vec<Vec<usize>> = groups
        .iter()
        .map(|g| g.iter().map(|&c| ctx.obs(c)).collect())
        .collect();
    if obs_groups.len() == 1 {
        return vec![Some(0); ctx.n];
    }
    let scores: Vec<Vec<f64>> = (0..ctx.n).map(|i| score_min(i, &obs_groups, sim)).collect();
    let unique = unique_neighbors(ctx, groups);
    let pools = update_temporary_clusters(ScorePools::initial(&unique, &scores), ctx.s);
    pools.labels(ctx.n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_centers::{LocalCenter, Neighborhood};

    /// Context whose M entries come from explicit neighborhoods.
    fn ctx_from(sets: &[Vec<usize>], n: usize, depths: &[f64]) -> CenterContext {
        let s = sets[0].len();
        let mut nbs: Vec<Neighborhood> = (0..n)
            .map(|i| Neighborhood {
                anchor: i,
                members: std::iter::once(i)
                    .chain((0..n).filter(|&j| j != i).take(s - 1))
                    .collect(),
            })
            .collect();
        let mut centers = Vec::new();
        for (c, set) in sets.iter().enumerate() {
            let anchor = set[0];
            nbs[anchor] = Neighborhood {
                anchor,
                members: set.clone(),
            };
            centers.push(LocalCenter {
                index: anchor,
                frequency: 10 - c,
                local_depth: depths[c],
                self_rank: 1,
            });
        }
        CenterContext::from_parts(nbs, centers, s)
    }

    #[test]
    fn single_center_one_group() {
        let ctx = ctx_from(&[vec![0, 1, 2, 3]], 10, &[0.5]);
        let g = group_by_local_depth(&ctx, &[0], ThresholdRange::default());
        assert_eq!(g.groups, vec![vec![0]]);
        assert_eq!(g.stable, vec![0]);
    }

    #[test]
    fn disjoint_centers_two_groups() {
        let ctx = ctx_from(&[vec![0, 1, 2, 3], vec![5, 6, 7, 8]], 10, &[0.5, 0.4]);
        assert_eq!(ctx.m(0, 1), 0.0);
        let g = group_by_local_depth(&ctx, &[0, 1], ThresholdRange::default());
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn overlapping_shallower_center_attaches() {
        // center 1 sits in center 0's top half and overlaps heavily
        let ctx = ctx_from(
            &[vec![0, 1, 2, 3, 4, 5], vec![1, 0, 2, 3, 4, 6]],
            10,
            &[0.9, 0.5],
        );
        let g = group_by_local_depth(&ctx, &[0, 1], ThresholdRange::default());
        assert_eq!(g.groups, vec![vec![0, 1]]);
        assert_eq!(g.stable, vec![0]);
    }

    #[test]
    fn score_arithmetic() {
        assert_eq!(min_score(0.5, 0.5), 0.0);
        assert_eq!(min_score(0.8, 0.4), 0.5);
        assert_eq!(min_score(0.4, 0.8), -0.5);
        assert_eq!(min_score(0.0, 0.0), 0.0);
    }

    #[test]
    fn cumulative_proportion_single() {
        let ctx = ctx_from(&[vec![0, 1, 2, 3], vec![0, 1, 2, 3]], 10, &[0.5, 0.4]);
        assert_eq!(ctx.cumulative_proportion(&[0]), vec![0.4]);
        assert_eq!(ctx.cumulative_proportion(&[0, 1]), vec![0.4, 0.4]);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[0.0, 1.0, 2.0, 3.0], 0.5), 1.5);
        assert_eq!(quantile(&[3.0, 1.0], 0.0), 1.0);
        assert_eq!(quantile(&[3.0, 1.0], 1.0), 3.0);
    }

    #[test]
    fn pools_no_op_when_bounds_hold() {
        let pools = ScorePools {
            accepted: vec![vec![(0, 0.9), (1, 0.8), (2, 0.85)]],
            deferred: vec![vec![(3, 0.1), (4, 0.2)]],
        };
        let out = update_temporary_clusters(pools.clone(), 4);
        assert_eq!(out, pools);
    }

    #[test]
    fn pools_demote_and_promote() {
        let pools = ScorePools {
            accepted: vec![vec![(0, 0.9), (1, 0.05), (2, 0.85)], vec![(5, 0.7)]],
            deferred: vec![vec![(3, 0.3), (4, 0.5), (5, 0.95)], vec![]],
        };
        // gamma1 = 0.583: observation 1 demoted; B = 2, gap term 0.9;
        // s/2 - B = 3 > 0, level 1 - 3/4 -> quantile 0.25 of {0.05, 0.3, 0.5, 0.95} = 0.2375
        let out = update_temporary_clusters(pools, 10);
        let mut acc: Vec<usize> = out.accepted[0].iter().map(|p| p.0).collect();
        acc.sort();
        // 5 stays with cluster 1 even though it scores high for cluster 0
        assert_eq!(acc, vec![0, 2, 3, 4]);
        assert_eq!(out.accepted[1], vec![(5, 0.7)]);
    }
}
