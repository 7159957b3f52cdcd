//! K-means, silhouette model selection, adjusted Rand index and the
//! exhaustive metric-subset search.

mod ari;
mod kmeans;
mod silhouette;
mod subset;

pub use ari::{ari, ari_labels};
pub use kmeans::{kmeans, kmeans_traced, LloydTrace, MAX_LLOYD_ITERATIONS};
pub use silhouette::silhouette;
pub use subset::{cumulative_ari, subset_search, SubsetResult};

use crate::table::TableError;

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("cluster count k={k} must satisfy 2 <= k <= {n} (number of points)")]
    InvalidK { k: usize, n: usize },
    #[error("invalid input: {0}")]
    Shape(String),
    #[error("partitions cover different experiment sets ({0} vs {1} items)")]
    Mismatched(usize, usize),
    #[error("subset search supports at most 24 metrics, got {0}")]
    TooManyMetrics(usize),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Cluster assignment over experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
    inertia: f64,
    centroids: Vec<Vec<f64>>,
}

impl Partition {
    /// Builds a partition from arbitrary labels, renumbering them `0..k` in
    /// order of first appearance. No centroids, zero inertia.
    pub fn from_labels(labels: &[usize]) -> Partition {
        let (labels, k, _) = relabel(labels);
        Partition {
            labels,
            k,
            inertia: 0.0,
            centroids: Vec::new(),
        }
    }

    pub(crate) fn canonical(labels: Vec<usize>, centroids: Vec<Vec<f64>>, inertia: f64) -> Partition {
        let (new_labels, k, order) = relabel(&labels);
        let centroids = order.iter().map(|&old| centroids[old].clone()).collect();
        Partition {
            labels: new_labels,
            k,
            inertia,
            centroids,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Renumbers labels by first appearance; also returns the old label of each
/// new one.
fn relabel(labels: &[usize]) -> (Vec<usize>, usize, Vec<usize>) {
    let mut order: Vec<usize> = Vec::new();
    let out = labels
        .iter()
        .map(|l| match order.iter().position(|o| o == l) {
            Some(i) => i,
            None => {
                order.push(*l);
                order.len() - 1
            }
        })
        .collect();
    (out, order.len(), order)
}

/// Silhouette of the HM-space clustering for one `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub k: usize,
    pub silhouette: f64,
    pub partition: Partition,
}

/// Clusters `points` for each `k` in `ks` and scores each with the
/// silhouette. `k` values larger than the point count are skipped.
pub fn select_k(points: &[Vec<f64>], ks: &[usize], seed: u64, restarts: usize) -> Result<Vec<KSelection>, ClusterError> {
    ks.iter()
        .filter(|&&k| k <= points.len())
        .map(|&k| {
            let partition = kmeans(points, k, seed, restarts)?;
            Ok(KSelection {
                k,
                silhouette: silhouette(points, &partition)?,
                partition,
            })
        })
        .collect()
}

/// The selection with the highest silhouette (smallest k on ties).
pub fn best_k(selections: &[KSelection]) -> Option<&KSelection> {
    selections
        .iter()
        .fold(None, |best: Option<&KSelection>, s| match best {
            Some(b) if b.silhouette >= s.silhouette => Some(b),
            _ => Some(s),
        })
}
