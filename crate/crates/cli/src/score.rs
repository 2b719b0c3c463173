//! Scoring saved labels against a cached similarity matrix.

use crate::io::{load_csv, read_labels};
use anyhow::{ensure, Context, Result};
use dlcc::metrics::{ari, ce, dc_metric, DcReport, DEFAULT_MIN_CLUSTER};
use dlcc::similarity::SimilarityMatrix;
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub schema: &'static str,
    pub dc: DcReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ari: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ce: Option<f64>,
}

/// Ground truth from either a labels file (`index,label`) or a dataset with a
/// `label` column, as written by `dlcc gen`.
fn read_truth(path: &Path) -> Result<Vec<usize>> {
    let header = csv::Reader::from_path(path)
        .and_then(|mut r| r.headers().cloned())
        .with_context(|| format!("reading {}", path.display()))?;
    if header.iter().eq(["index", "label"]) {
        return Ok(read_labels(path)?);
    }
    load_csv(path, Some("label"))?
        .truth
        .with_context(|| format!("{} has no label column", path.display()))
}

pub fn score(labels: &Path, cache: &Path, truth: Option<&Path>) -> Result<ScoreReport> {
    let pred = read_labels(labels)?;
    let sim =
        SimilarityMatrix::load(cache).with_context(|| format!("reading {}", cache.display()))?;
    ensure!(
        pred.len() == sim.n(),
        "{} labels but the similarity matrix has {} rows",
        pred.len(),
        sim.n()
    );
    let sim = if sim.is_symmetric() {
        sim
    } else {
        sim.symmetrize()
    };
    let dc = dc_metric(&sim, &pred, DEFAULT_MIN_CLUSTER)?;
    let truth = truth.map(read_truth).transpose()?;
    if let Some(t) = &truth {
        ensure!(
            t.len() == pred.len(),
            "truth has {} labels, expected {}",
            t.len(),
            pred.len()
        );
    }
    Ok(ScoreReport {
        schema: crate::run::SCHEMA,
        dc,
        ari: truth.as_ref().map(|t| ari(&pred, t)),
        ce: truth.as_ref().map(|t| ce(&pred, t)),
    })
}
