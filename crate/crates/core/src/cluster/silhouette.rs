use super::{ClusterError, Partition};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean silhouette `(b − a) / max(a, b)` with Euclidean distances.
/// Points alone in their cluster contribute 0.
pub fn silhouette(points: &[Vec<f64>], part: &Partition) -> Result<f64, ClusterError> {
    if part.len() != points.len() {
        return Err(ClusterError::Mismatched(points.len(), part.len()));
    }
    let k = part.k();
    if k < 2 {
        return Err(ClusterError::InvalidK { k, n: points.len() });
    }
    let labels = part.labels();
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.contains(&0) {
        return Err(ClusterError::Shape("every cluster must be non-empty".into()));
    }

    let n = points.len();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[labels[j]] += dist(&points[i], &points[j]);
            }
        }
        let own = labels[i];
        if sizes[own] == 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}
