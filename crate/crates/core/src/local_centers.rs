//! Neighborhoods, local ranks, local centers and the center-neighborhood
//! similarity matrix `M`.

use crate::data::DataMatrix;
use crate::depth::{depths_within, DepthKind};
use crate::error::{DlccError, Result};
use crate::similarity::SimilarityMatrix;
use crate::util::BitSet;
use rayon::prelude::*;
use serde::Serialize;

/// An anchor and its `s - 1` most similar observations, anchor first, then
/// by descending similarity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub anchor: usize,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalCenter {
    pub index: usize,
    pub frequency: usize,
    pub local_depth: f64,
    pub self_rank: usize,
}

/// Builds every neighborhood of size `s` from the rows of `sim`. Ties at the
/// cut keep the lower index.
pub fn neighborhoods(sim: &SimilarityMatrix, s: usize) -> Result<Vec<Neighborhood>> {
    let n = sim.n();
    if s < 2 || s > n {
        return Err(DlccError::NeighborhoodSize { s, n });
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let row = sim.row(i);
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let cmp = |a: &usize, b: &usize| row[*b].total_cmp(&row[*a]).then(a.cmp(b));
            if s - 1 < others.len() {
                others.select_nth_unstable_by(s - 2, cmp);
                others.truncate(s - 1);
            }
            others.sort_by(cmp);
            let mut members = Vec::with_capacity(s);
            members.push(i);
            members.extend(others);
            Neighborhood { anchor: i, members }
        })
        .collect())
}

/// `1 + #{strictly larger depths}` for every entry.
pub fn ranks_from_depths(depths: &[f64]) -> Vec<usize> {
    let mut sorted: Vec<f64> = depths.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    depths
        .iter()
        .map(|d| 1 + sorted.partition_point(|v| v > d))
        .collect()
}

/// Local depths and ranks of the members of `nb` within the neighborhood.
pub fn local_ranks(nb: &Neighborhood, x: &DataMatrix, kind: DepthKind) -> (Vec<f64>, Vec<usize>) {
    let depths = depths_within(x, &nb.members, kind);
    let ranks = ranks_from_depths(&depths);
    (depths, ranks)
}

/// Per-neighborhood analysis: depths and ranks of every member, and the
/// center (deepest member, lowest index on ties) of every neighborhood.
#[derive(Debug, Clone)]
pub struct RankedNeighborhoods {
    pub neighborhoods: Vec<Neighborhood>,
    pub depths: Vec<Vec<f64>>,
    pub ranks: Vec<Vec<usize>>,
    pub center_of: Vec<usize>,
}

pub fn rank_neighborhoods(
    x: &DataMatrix,
    nbs: Vec<Neighborhood>,
    kind: DepthKind,
) -> RankedNeighborhoods {
    let (depths, ranks): (Vec<_>, Vec<_>) =
        nbs.par_iter().map(|nb| local_ranks(nb, x, kind)).unzip();
    let center_of = nbs
        .iter()
        .zip(&ranks)
        .map(|(nb, r)| {
            nb.members
                .iter()
                .zip(r)
                .filter(|(_, &rank)| rank == 1)
                .map(|(&m, _)| m)
                .min()
                .expect("a neighborhood always has a deepest member")
        })
        .collect();
    RankedNeighborhoods {
        neighborhoods: nbs,
        depths,
        ranks,
        center_of,
    }
}

/// Aggregates neighborhood centers. Output is in frequency order: descending
/// `f`, ties by ascending observation index.
pub fn detect_centers(ranked: &RankedNeighborhoods) -> Vec<LocalCenter> {
    let n = ranked.neighborhoods.len();
    let mut freq = vec![0usize; n];
    for &c in &ranked.center_of {
        freq[c] += 1;
    }
    let mut centers: Vec<LocalCenter> = (0..n)
        .filter(|&i| freq[i] > 0)
        .map(|i| LocalCenter {
            index: i,
            frequency: freq[i],
            // the anchor is the first member of its own neighborhood
            local_depth: ranked.depths[i][0],
            self_rank: ranked.ranks[i][0],
        })
        .collect();
    centers.sort_by(|a, b| b.frequency.cmp(&a.frequency).then(a.index.cmp(&b.index)));
    centers
}

/// Symmetric `T x T` overlap proportions between center neighborhoods.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSimilarity {
    t: usize,
    values: Vec<f64>,
}

impl CenterSimilarity {
    pub fn from_values(t: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), t * t);
        Self { t, values }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.t + b]
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    /// Restriction to the listed rows/columns, in the given order.
    pub fn restrict(&self, ids: &[usize]) -> Self {
        let t = ids.len();
        let values = ids
            .iter()
            .flat_map(|&a| ids.iter().map(move |&b| (a, b)))
            .map(|(a, b)| self.get(a, b))
            .collect();
        Self { t, values }
    }
}

/// `M_ab = |N_a ∩ N_b| / s`.
pub fn center_similarity(sets: &[BitSet], s: usize) -> CenterSimilarity {
    let t = sets.len();
    let mut values = vec![0.0; t * t];
    for a in 0..t {
        values[a * t + a] = 1.0;
        for b in a + 1..t {
            let v = sets[a].intersection_count(&sets[b]) as f64 / s as f64;
            values[a * t + b] = v;
            values[b * t + a] = v;
        }
    }
    CenterSimilarity { t, values }
}

/// Everything the grouping strategies need about the detected centers.
/// Center ids are positions in `centers`, which is in frequency order.
#[derive(Debug, Clone)]
pub struct CenterContext {
    pub n: usize,
    pub s: usize,
    pub centers: Vec<LocalCenter>,
    pub neighborhoods: Vec<Neighborhood>,
    /// Member set of each center's own neighborhood, by center id.
    pub sets: Vec<BitSet>,
    pub m: CenterSimilarity,
}

impl CenterContext {
    pub fn build(
        x: &DataMatrix,
        sim: &SimilarityMatrix,
        s: usize,
        kind: DepthKind,
    ) -> Result<Self> {
        let nbs = neighborhoods(sim, s)?;
        let ranked = rank_neighborhoods(x, nbs, kind);
        let centers = detect_centers(&ranked);
        Ok(Self::from_parts(ranked.neighborhoods, centers, s))
    }

    pub fn from_parts(
        neighborhoods: Vec<Neighborhood>,
        centers: Vec<LocalCenter>,
        s: usize,
    ) -> Self {
        let n = neighborhoods.len();
        let sets: Vec<BitSet> = centers
            .iter()
            .map(|c| BitSet::from_indices(n, neighborhoods[c.index].members.iter().copied()))
            .collect();
        let m = center_similarity(&sets, s);
        Self {
            n,
            s,
            centers,
            neighborhoods,
            sets,
            m,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Observation index of a center id.
    #[inline]
    pub fn obs(&self, id: usize) -> usize {
        self.centers[id].index
    }

    #[inline]
    pub fn m(&self, a: usize, b: usize) -> f64 {
        self.m.get(a, b)
    }

    /// Members of the center's own neighborhood.
    pub fn members(&self, id: usize) -> &[usize] {
        &self.neighborhoods[self.obs(id)].members
    }

    /// Union of the neighborhoods of `ids`.
    pub fn union(&self, ids: &[usize]) -> BitSet {
        let mut acc = BitSet::new(self.n);
        for &id in ids {
            acc.union_with(&self.sets[id]);
        }
        acc
    }

    /// `|∪_{p ≤ t} N_{c_p}| / n` for every prefix of `ids`.
    pub fn cumulative_proportion(&self, ids: &[usize]) -> Vec<f64> {
        let mut acc = BitSet::new(self.n);
        ids.iter()
            .map(|&id| {
                acc.union_with(&self.sets[id]);
                acc.count() as f64 / self.n as f64
            })
            .collect()
    }

    /// Initial filter shared by both strategies: self rank at most 2 and
    /// frequency at least 2, in frequency order.
    pub fn initial_filter(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&id| self.centers[id].self_rank <= 2 && self.centers[id].frequency >= 2)
            .collect()
    }
}
