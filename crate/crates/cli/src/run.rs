//! Single runs, parameter sweeps ranked by DC, and report assembly.

use crate::io::labels_csv;
use crate::svg::scatter_svg;
use anyhow::{Context, Result};
use dlcc::metrics::{ari, ce};
use dlcc::pipeline::{dlcc_prepared, max_hierarchy, prepare_similarity, PreparedSimilarity};
use dlcc::{ClusteringResult, DataMatrix, DlccConfig, Strategy};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

pub const SCHEMA: &str = "dlcc-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Emit {
    pub json: bool,
    pub csv: bool,
    pub svg: bool,
    /// Binary similarity cache for `dlcc score`.
    pub cache: bool,
}

impl Emit {
    pub fn parse(list: &str) -> Result<Self> {
        let mut e = Emit::default();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "json" => e.json = true,
                "csv" => e.csv = true,
                "svg" => e.svg = true,
                "cache" => e.cache = true,
                other => {
                    anyhow::bail!("unknown output kind `{other}` (expected json, csv, svg, cache)")
                }
            }
        }
        Ok(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub s: Vec<usize>,
    /// Explicit thresholds for the max strategy; `None` takes them from the
    /// merge hierarchy at each `s`.
    pub deltas: Option<Vec<f64>>,
}

impl SweepGrid {
    /// Default neighborhood sizes for `n` observations.
    pub fn default_for(strategy: Strategy, n: usize) -> Self {
        let s = match strategy {
            Strategy::Min => {
                let r = (n as f64).sqrt().ceil() as usize;
                vec![(r / 2).max(2), r, 2 * r]
            }
            Strategy::Max => vec![8, 12, 16, 24, 32, 48],
        };
        let mut s: Vec<usize> = s.into_iter().map(|v| v.clamp(2, n)).collect();
        s.dedup();
        Self { s, deltas: None }
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub config: DlccConfig,
    pub sweep: Option<SweepGrid>,
    /// Omit timings so identical specs give identical reports.
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub dc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ari: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ce: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub similarity_ms: f64,
    pub clustering_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub s: usize,
    pub delta: Option<f64>,
    pub k: Option<usize>,
    pub dc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub n: usize,
    pub d: usize,
    pub config: DlccConfig,
    pub result: ClusteringResult,
    pub metrics: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaderboard: Option<Vec<SweepCell>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn external(result: &ClusteringResult, truth: Option<&[usize]>) -> Metrics {
    Metrics {
        dc: result.diagnostics.dc,
        ari: truth.map(|t| ari(&result.labels, t)),
        ce: truth.map(|t| ce(&result.labels, t)),
    }
}

/// All `(s, delta)` cells of a sweep, in grid order.
pub fn sweep_cells(
    x: &DataMatrix,
    prep: &PreparedSimilarity,
    cfg: &DlccConfig,
    grid: &SweepGrid,
) -> Vec<(usize, Option<f64>)> {
    let mut cells = Vec::new();
    for &s in &grid.s {
        match cfg.strategy {
            Strategy::Min => cells.push((s, None)),
            Strategy::Max => {
                let deltas: Vec<f64> = match &grid.deltas {
                    Some(d) => d.clone(),
                    None => match max_hierarchy(x, prep, s) {
                        Ok(Some(tr)) => tr
                            .deltas
                            .iter()
                            .zip(&tr.group_counts)
                            .filter(|(_, &g)| cfg.k.is_none_or(|k| g == k))
                            .map(|(&d, _)| d)
                            .collect(),
                        Ok(None) => vec![0.0],
                        Err(e) => {
                            log::warn!("s = {s}: {e}");
                            vec![]
                        }
                    },
                };
                cells.extend(deltas.into_iter().map(|d| (s, Some(d))));
            }
        }
    }
    cells
}

/// Runs every cell and returns the leaderboard sorted by DC (descending,
/// failures last) together with the best result.
pub fn run_sweep(
    x: &DataMatrix,
    prep: &PreparedSimilarity,
    cfg: &DlccConfig,
    grid: &SweepGrid,
) -> Result<(Vec<SweepCell>, ClusteringResult)> {
    let cells = sweep_cells(x, prep, cfg, grid);
    anyhow::ensure!(!cells.is_empty(), "the sweep grid is empty");
    let outcomes: Vec<(SweepCell, Option<ClusteringResult>)> = cells
        .par_iter()
        .map(|&(s, delta)| {
            let mut c = cfg.clone();
            c.s = s;
            c.delta = delta;
            if c.strategy == Strategy::Max {
                c.k = None;
            }
            match dlcc_prepared(x, prep, &c) {
                Ok(r) => (
                    SweepCell {
                        s,
                        delta,
                        k: Some(r.k),
                        dc: r.diagnostics.dc,
                        error: None,
                    },
                    Some(r),
                ),
                Err(e) => (
                    SweepCell {
                        s,
                        delta,
                        k: None,
                        dc: None,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    // stable sort keeps grid order among equal scores
    order.sort_by(|&a, &b| {
        let (da, db) = (outcomes[a].0.dc, outcomes[b].0.dc);
        match (da, db) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        }
    });
    let best = order
        .iter()
        .find_map(|&i| outcomes[i].1.clone().filter(|_| outcomes[i].0.dc.is_some()))
        .or_else(|| order.iter().find_map(|&i| outcomes[i].1.clone()))
        .with_context(|| {
            let first = outcomes
                .iter()
                .find_map(|(c, _)| c.error.clone())
                .unwrap_or_default();
            format!("every sweep cell failed; first error: {first}")
        })?;
    let board = order.into_iter().map(|i| outcomes[i].0.clone()).collect();
    Ok((board, best))
}

/// Executes `spec` on `x`, scoring against `truth` when given.
pub fn run(
    x: &DataMatrix,
    truth: Option<&[usize]>,
    spec: &RunSpec,
) -> Result<(RunReport, PreparedSimilarity)> {
    let cfg = &spec.config;
    let t0 = Instant::now();
    let prep = prepare_similarity(x, cfg)
        .with_context(|| format!("building similarity ({:?} depth)", cfg.depth))?;
    let similarity_ms = ms(t0);
    let t1 = Instant::now();
    let (result, leaderboard) = match &spec.sweep {
        None => {
            let r = dlcc_prepared(x, &prep, cfg).with_context(|| {
                format!("clustering with s = {}, strategy {:?}", cfg.s, cfg.strategy)
            })?;
            (r, None)
        }
        Some(grid) => {
            let (board, best) = run_sweep(x, &prep, cfg, grid)?;
            (best, Some(board))
        }
    };
    let clustering_ms = ms(t1);
    let mut config = cfg.clone();
    if spec.sweep.is_some() {
        config.s = result.diagnostics.s;
        config.delta = result.diagnostics.delta;
    }
    let report = RunReport {
        schema: SCHEMA,
        n: x.nrows(),
        d: x.ncols(),
        config,
        metrics: external(&result, truth),
        result,
        leaderboard,
        timings: (!spec.stable).then_some(Timings {
            similarity_ms,
            clustering_ms,
        }),
    };
    Ok((report, prep))
}

/// Writes the requested outputs into `dir`, creating it if needed.
pub fn write_outputs(
    dir: &Path,
    report: &RunReport,
    x: &DataMatrix,
    prep: &PreparedSimilarity,
    emit: Emit,
) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    if emit.json {
        let p = dir.join("report.json");
        std::fs::write(&p, report.to_json())?;
        written.push(p);
    }
    if emit.csv {
        let p = dir.join("labels.csv");
        std::fs::write(&p, labels_csv(&report.result.labels))?;
        written.push(p);
    }
    if emit.svg {
        let p = dir.join("clusters.svg");
        std::fs::write(&p, scatter_svg(x, &report.result.labels))?;
        written.push(p);
    }
    if emit.cache {
        let p = dir.join("similarity.bin");
        prep.sym.save(&p)?;
        written.push(p);
    }
    Ok(written)
}
