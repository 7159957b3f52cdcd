use std::cmp::Ordering;

use rayon::prelude::*;

use super::{ari, kmeans, ClusterError, Partition};
use crate::table::NormalizedTable;

/// Agreement between the clustering of one metric subset and the reference
/// partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetResult {
    /// Member metric names, in table column order.
    pub metrics: Vec<String>,
    pub ari: f64,
    pub k: usize,
}

impl SubsetResult {
    pub fn contains(&self, metric: &str) -> bool {
        self.metrics.iter().any(|m| m == metric)
    }
}

fn ranking(a: &SubsetResult, b: &SubsetResult) -> Ordering {
    b.ari
        .total_cmp(&a.ari)
        .then(a.metrics.len().cmp(&b.metrics.len()))
        .then_with(|| a.metrics.cmp(&b.metrics))
}

/// Clusters the experiments in every non-empty subset of the table's
/// columns and scores each clustering against `reference` with the ARI.
///
/// Results are sorted by ARI (descending), then subset size, then member
/// names. The table must be complete (impute first).
pub fn subset_search(
    qm: &NormalizedTable,
    reference: &Partition,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<Vec<SubsetResult>, ClusterError> {
    let n_metrics = qm.columns.len();
    if n_metrics > 24 {
        return Err(ClusterError::TooManyMetrics(n_metrics));
    }
    if reference.len() != qm.len() {
        return Err(ClusterError::Mismatched(qm.len(), reference.len()));
    }
    let full = qm.all_features()?;
    let masks: Vec<u32> = (1..(1u32 << n_metrics)).collect();
    let mut results = masks
        .par_iter()
        .map(|&mask| {
            let cols: Vec<usize> = (0..n_metrics).filter(|j| mask & (1 << j) != 0).collect();
            let points: Vec<Vec<f64>> = full.iter().map(|row| cols.iter().map(|&j| row[j]).collect()).collect();
            let part = kmeans(&points, k, seed, restarts)?;
            Ok(SubsetResult {
                metrics: cols.iter().map(|&j| qm.columns[j].clone()).collect(),
                ari: ari(&part, reference)?,
                k,
            })
        })
        .collect::<Result<Vec<_>, ClusterError>>()?;
    results.sort_by(ranking);
    Ok(results)
}

/// Sum of ARI over every subset containing each metric, sorted descending
/// (ties by name). Sums run over `results` in the order given.
pub fn cumulative_ari(results: &[SubsetResult]) -> Vec<(String, f64)> {
    let mut names: Vec<String> = Vec::new();
    for r in results {
        for m in &r.metrics {
            if !names.contains(m) {
                names.push(m.clone());
            }
        }
    }
    let mut scores: Vec<(String, f64)> = names
        .into_iter()
        .map(|name| {
            let total = results.iter().filter(|r| r.contains(&name)).map(|r| r.ari).sum();
            (name, total)
        })
        .collect();
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scores
}
