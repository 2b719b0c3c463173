//! End-to-end clustering: similarity, local centers, strategy-specific
//! grouping, temporary clusters, classification and refinement.

use crate::assign::{complete_labels, run_ifloop, Classifier, ClassifySettings};
use crate::data::DataMatrix;
use crate::depth::{select_covariance_model, CovarianceKind, CovarianceModel, DepthKind};
use crate::error::{DlccError, Result};
use crate::forest::ForestConfig;
use crate::grouping_max::{self, HierarchyTrace};
use crate::grouping_min::{self, FilterBranch, ThresholdRange};
use crate::local_centers::CenterContext;
use crate::metrics::{dc_metric, DEFAULT_MIN_CLUSTER};
use crate::similarity::{build_md_similarity, build_sd_similarity, SimilarityMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlccConfig {
    pub depth: DepthKind,
    pub strategy: Strategy,
    pub s: usize,
    /// Similarity threshold for the max strategy.
    pub delta: Option<f64>,
    pub k: Option<usize>,
    pub classifier: Classifier,
    pub maxdepth: bool,
    pub ifloop: bool,
    /// Neighbors for the KNN classifier; `None` means `ceil(sqrt(labeled))`.
    pub knn_k: Option<usize>,
    pub rf: ForestConfig,
    pub iteration_cap: usize,
    pub threshold_range: ThresholdRange,
    /// Forces the Mahalanobis covariance model. By default the min strategy
    /// runs the selection gate and the max strategy uses the global model.
    pub md_model: Option<CovarianceKind>,
    /// Seed for the EEV fit.
    pub seed: u64,
    /// Minimum DBCA cluster size for the DC metric; `None` skips DC.
    pub dc_min_cluster: Option<usize>,
}

impl Default for DlccConfig {
    fn default() -> Self {
        Self {
            depth: DepthKind::Sd,
            strategy: Strategy::Min,
            s: 20,
            delta: None,
            k: None,
            classifier: Classifier::Mdc,
            maxdepth: false,
            ifloop: false,
            knn_k: None,
            rf: ForestConfig::default(),
            iteration_cap: 100,
            threshold_range: ThresholdRange::default(),
            md_model: None,
            seed: 0,
            dc_min_cluster: Some(DEFAULT_MIN_CLUSTER),
        }
    }
}

impl DlccConfig {
    fn validate(&self, n: usize) -> Result<()> {
        if self.s < 2 || self.s > n {
            return Err(DlccError::NeighborhoodSize { s: self.s, n });
        }
        if let Some(d) = self.delta {
            if !(0.0..=1.0).contains(&d) {
                return Err(DlccError::Config(format!(
                    "delta must lie in [0, 1], got {d}"
                )));
            }
        }
        if self.k == Some(0) {
            return Err(DlccError::Config("K must be at least 1".into()));
        }
        let r = self.threshold_range;
        if !(r.lo <= r.hi) {
            return Err(DlccError::Config(
                "threshold range must satisfy lo <= hi".into(),
            ));
        }
        Ok(())
    }

    fn classify_settings(&self) -> ClassifySettings {
        ClassifySettings {
            classifier: self.classifier,
            depth: self.depth,
            knn_k: self.knn_k,
            rf: self.rf,
            maxdepth: self.maxdepth,
            iteration_cap: self.iteration_cap,
        }
    }
}

/// Raw and symmetrized similarity for one dataset and depth setting.
#[derive(Debug, Clone)]
pub struct PreparedSimilarity {
    pub raw: SimilarityMatrix,
    pub sym: SimilarityMatrix,
    pub depth: DepthKind,
    pub covariance: Option<CovarianceKind>,
}

/// Builds the similarity matrix the pipeline will use for `cfg`.
pub fn prepare_similarity(x: &DataMatrix, cfg: &DlccConfig) -> Result<PreparedSimilarity> {
    let (raw, covariance) = match cfg.depth {
        DepthKind::Sd => (
            build_sd_similarity(x).map_err(DlccError::at("similarity"))?,
            None,
        ),
        DepthKind::Md => {
            let kind = cfg.md_model.unwrap_or(match cfg.strategy {
                Strategy::Min => CovarianceKind::PerClusterEev,
                Strategy::Max => CovarianceKind::Global,
            });
            let model = match kind {
                CovarianceKind::PerClusterEev => select_covariance_model(x, cfg.seed),
                CovarianceKind::Global => CovarianceModel::global(x),
                CovarianceKind::Identity => CovarianceModel::identity(x.nrows(), x.ncols()),
            };
            let s = build_md_similarity(x, &model).map_err(DlccError::at("similarity"))?;
            (s, Some(model.kind))
        }
    };
    let sym = raw.symmetrize();
    Ok(PreparedSimilarity {
        raw,
        sym,
        depth: cfg.depth,
        covariance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub s: usize,
    pub delta: Option<f64>,
    pub classifier: Classifier,
    pub covariance: Option<CovarianceKind>,
    pub local_centers: usize,
    /// Observation indices of the filtered centers, per group.
    pub groups: Vec<Vec<usize>>,
    pub filter_branch: Option<FilterBranch>,
    pub trace: Option<HierarchyTrace>,
    pub temporarily_labeled: usize,
    pub maxdepth_sweeps: usize,
    pub ifloop_iterations: Option<usize>,
    pub ifloop_converged: Option<bool>,
    pub dc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringResult {
    /// Cluster of every observation, `0..k`.
    pub labels: Vec<usize>,
    pub k: usize,
    pub strategy: Strategy,
    pub diagnostics: Diagnostics,
}

/// Merge hierarchy of the max-strategy filtered centers at neighborhood size
/// `s`; `None` when a single center survives.
pub fn max_hierarchy(
    x: &DataMatrix,
    prep: &PreparedSimilarity,
    s: usize,
) -> Result<Option<HierarchyTrace>> {
    if s < 2 || s > x.nrows() {
        return Err(DlccError::NeighborhoodSize { s, n: x.nrows() });
    }
    let ctx = CenterContext::build(x, &prep.raw, s, prep.depth)
        .map_err(DlccError::at("local_centers"))?;
    let (centers, _) = grouping_max::filter_max(&ctx).map_err(DlccError::at("grouping_max"))?;
    if centers.len() == 1 {
        return Ok(None);
    }
    Ok(Some(grouping_max::hierarchy_trace(
        &ctx.m.restrict(&centers),
    )))
}

/// Runs the full pipeline.
pub fn dlcc(x: &DataMatrix, cfg: &DlccConfig) -> Result<ClusteringResult> {
    cfg.validate(x.nrows())?;
    let prep = prepare_similarity(x, cfg)?;
    dlcc_prepared(x, &prep, cfg)
}

/// Runs the pipeline on a precomputed similarity (e.g. across a parameter
/// sweep). `prep.depth` must match `cfg.depth`.
pub fn dlcc_prepared(
    x: &DataMatrix,
    prep: &PreparedSimilarity,
    cfg: &DlccConfig,
) -> Result<ClusteringResult> {
    cfg.validate(x.nrows())?;
    if prep.depth != cfg.depth {
        return Err(DlccError::Config(
            "prepared similarity was built for a different depth".into(),
        ));
    }
    if prep.raw.n() != x.nrows() {
        return Err(DlccError::Config(
            "prepared similarity does not match the data size".into(),
        ));
    }
    let ctx = CenterContext::build(x, &prep.raw, cfg.s, cfg.depth)
        .map_err(DlccError::at("local_centers"))?;

    let mut filter_branch = None;
    let mut trace = None;
    let mut delta_used = None;
    let groups: Vec<Vec<usize>> = match cfg.strategy {
        Strategy::Min => {
            if cfg.delta.is_some() {
                log::warn!("delta is ignored under the min strategy");
            }
            let filt = grouping_min::filter_min(&ctx, cfg.threshold_range)
                .map_err(DlccError::at("grouping_min"))?;
            filter_branch = Some(filt.branch);
            let grouping =
                grouping_min::group_by_local_depth(&ctx, &filt.centers, cfg.threshold_range);
            let grouping = grouping_min::trim_groups(&ctx, grouping, cfg.k)
                .map_err(DlccError::at("grouping_min"))?;
            grouping.groups
        }
        Strategy::Max => {
            if cfg.ifloop {
                log::warn!("ifloop is ignored under the max strategy");
            }
            let (centers, _) =
                grouping_max::filter_max(&ctx).map_err(DlccError::at("grouping_max"))?;
            if centers.len() == 1 {
                vec![centers]
            } else {
                let m = ctx.m.restrict(&centers);
                let tr = grouping_max::hierarchy_trace(&m);
                let delta = match (cfg.delta, cfg.k) {
                    (Some(d), _) => d,
                    (None, Some(k)) => tr.delta_for(k),
                    (None, None) => 0.99 * grouping_max::delta_upper(&m),
                };
                delta_used = Some(delta);
                trace = Some(tr);
                grouping_max::group_at_delta(&m, delta)
                    .into_iter()
                    .map(|g| g.into_iter().map(|p| centers[p]).collect())
                    .collect()
            }
        }
    };

    let mut temp = match cfg.strategy {
        Strategy::Min => grouping_min::temporary_clusters(&ctx, &groups, &prep.sym),
        Strategy::Max => grouping_max::temporary_clusters(&ctx, &groups),
    };
    // clusters that received no temporary members cannot seed a classifier
    let mut sizes = vec![0usize; groups.len()];
    for c in temp.iter().flatten() {
        sizes[*c] += 1;
    }
    let keep: Vec<usize> = (0..groups.len()).filter(|&g| sizes[g] > 0).collect();
    if keep.is_empty() {
        return Err(DlccError::at("assign_refine")(DlccError::NoCenters {
            s: cfg.s,
        }));
    }
    if keep.len() < groups.len() {
        log::debug!(
            "{} groups produced empty temporary clusters and were dropped",
            groups.len() - keep.len()
        );
        let remap: Vec<Option<usize>> = (0..groups.len())
            .map(|g| keep.iter().position(|&k| k == g))
            .collect();
        for l in temp.iter_mut() {
            *l = l.and_then(|c| remap[c]);
        }
    }
    let groups: Vec<Vec<usize>> = keep.iter().map(|&g| groups[g].clone()).collect();
    let k = groups.len();
    let temporarily_labeled = temp.iter().filter(|l| l.is_some()).count();

    let settings = cfg.classify_settings();
    let (mut labels, maxdepth_sweeps) = complete_labels(x, &prep.sym, &temp, k, &settings);
    let mut ifloop_iterations = None;
    let mut ifloop_converged = None;
    if cfg.ifloop && cfg.strategy == Strategy::Min {
        let out = run_ifloop(x, &ctx, &groups, &prep.sym, labels, &settings);
        labels = out.labels;
        ifloop_iterations = Some(out.iterations);
        ifloop_converged = Some(out.converged);
    }

    let dc = cfg
        .dc_min_cluster
        .and_then(|m| match dc_metric(&prep.sym, &labels, m) {
            Ok(r) => Some(r.dc),
            Err(e) => {
                log::debug!("DC metric unavailable: {e}");
                None
            }
        });
    Ok(ClusteringResult {
        labels,
        k,
        strategy: cfg.strategy,
        diagnostics: Diagnostics {
            s: cfg.s,
            delta: delta_used,
            classifier: cfg.classifier,
            covariance: prep.covariance,
            local_centers: ctx.len(),
            groups: groups
                .iter()
                .map(|g| g.iter().map(|&c| ctx.obs(c)).collect())
                .collect(),
            filter_branch,
            trace,
            temporarily_labeled,
            maxdepth_sweeps,
            ifloop_iterations,
            ifloop_converged,
            dc,
        },
    })
}
