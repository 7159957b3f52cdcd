use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClusterError, Partition};

pub const MAX_LLOYD_ITERATIONS: usize = 300;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Diagnostics from one Lloyd run.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydTrace {
    /// Inertia after each assignment step.
    pub inertia: Vec<f64>,
    pub converged: bool,
}

fn validate(points: &[Vec<f64>], k: usize) -> Result<usize, ClusterError> {
    if k < 2 {
        return Err(ClusterError::InvalidK { k, n: points.len() });
    }
    if k > points.len() {
        return Err(ClusterError::InvalidK { k, n: points.len() });
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(ClusterError::Shape("points must share a non-zero dimension".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ClusterError::Shape("points must be finite".into()));
    }
    Ok(dim)
}

/// k-means++ seeding.
fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            if d2[pick] == 0.0 {
                // rounding fell off the end; take the last point with weight
                pick = d2.iter().rposition(|w| *w > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centroids.push(points[next].clone());
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(sq_dist(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

/// Assigns each point to its nearest centroid (lowest index on ties) and
/// returns the inertia.
fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (p, label) in points.iter().zip(labels.iter_mut()) {
        let (best, d) = centroids
            .iter()
            .enumerate()
            .map(|(c, m)| (c, sq_dist(p, m)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        *label = best;
        inertia += d;
    }
    inertia
}

fn update(points: &[Vec<f64>], labels: &[usize], centroids: &mut [Vec<f64>]) -> Vec<usize> {
    let dim = points[0].len();
    let k = centroids.len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    let mut empty = Vec::new();
    for c in 0..k {
        if counts[c] == 0 {
            empty.push(c);
        } else {
            centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
    }
    empty
}

/// Moves each empty cluster's centroid onto the point farthest from its
/// own centroid, taking that point away from a cluster with other members.
fn reseed_empty(points: &[Vec<f64>], labels: &mut [usize], centroids: &mut [Vec<f64>], empty: &[usize]) {
    let k = centroids.len();
    for &c in empty {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let far = (0..points.len())
            .filter(|&i| counts[labels[i]] > 1)
            .map(|i| (i, sq_dist(&points[i], &centroids[labels[i]])))
            .fold(None, |acc: Option<(usize, f64)>, x| match acc {
                Some(a) if a.1 >= x.1 => Some(a),
                _ => Some(x),
            });
        if let Some((i, _)) = far {
            centroids[c] = points[i].clone();
            labels[i] = c;
        }
    }
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> (Vec<usize>, Vec<Vec<f64>>, f64, LloydTrace) {
    let n = points.len();
    let mut labels = vec![usize::MAX; n];
    let mut trace = LloydTrace {
        inertia: Vec::new(),
        converged: false,
    };
    let mut prev = labels.clone();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let inertia = assign(points, &centroids, &mut labels);
        trace.inertia.push(inertia);
        if labels == prev {
            trace.converged = true;
            break;
        }
        prev.clone_from(&labels);
        let empty = update(points, &labels, &mut centroids);
        if !empty.is_empty() {
            reseed_empty(points, &mut labels, &mut centroids, &empty);
            update(points, &labels, &mut centroids);
        }
    }
    // Coincident centroids can leave a cluster empty after the final
    // assignment; hand it a point so every cluster is populated.
    let empty = update(points, &labels, &mut centroids);
    if !empty.is_empty() {
        reseed_empty(points, &mut labels, &mut centroids, &empty);
        update(points, &labels, &mut centroids);
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum();
    (labels, centroids, inertia, trace)
}

/// Best-inertia k-means over `restarts` k-means++ initializations.
///
/// Deterministic for a fixed `(seed, restarts)` and point order. Labels are
/// renumbered in order of first appearance.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<Partition, ClusterError> {
    kmeans_traced(points, k, seed, restarts).map(|(p, _)| p)
}

/// Like [`kmeans`], also returning the per-restart Lloyd traces.
pub fn kmeans_traced(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<(Partition, Vec<LloydTrace>), ClusterError> {
    if points.is_empty() {
        return Err(ClusterError::InvalidK { k, n: 0 });
    }
    validate(points, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, Vec<Vec<f64>>, f64)> = None;
    let mut traces = Vec::with_capacity(restarts.max(1));
    for _ in 0..restarts.max(1) {
        let init = plus_plus(points, k, &mut rng);
        let (labels, centroids, inertia, trace) = lloyd(points, init);
        traces.push(trace);
        if best.as_ref().is_none_or(|b| inertia < b.2) {
            best = Some((labels, centroids, inertia));
        }
    }
    let (labels, centroids, inertia) = best.expect("at least one restart");
    Ok((Partition::canonical(labels, centroids, inertia), traces))
}
