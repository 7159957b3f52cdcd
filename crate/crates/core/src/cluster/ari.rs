use std::collections::HashMap;

use super::{ClusterError, Partition};

fn pairs(n: u64) -> i128 {
    (n as i128) * (n as i128 - 1) / 2
}

/// Adjusted Rand index between two labelings of the same items.
///
/// Computed from the contingency table as a single ratio of integers,
/// `(2N·I − 2·Sa·Sb) / (N·(Sa + Sb) − 2·Sa·Sb)`, so the result is the
/// correctly rounded value of the exact rational index. When both
/// labelings are trivial (one cluster, or all singletons) the index is
/// defined as 1.
pub fn ari_labels(a: &[usize], b: &[usize]) -> Result<f64, ClusterError> {
    if a.len() != b.len() {
        return Err(ClusterError::Mismatched(a.len(), b.len()));
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: i128 = table.values().map(|&c| pairs(c)).sum();
    let sa: i128 = rows.values().map(|&c| pairs(c)).sum();
    let sb: i128 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(a.len() as u64);

    let num = 2 * total * index - 2 * sa * sb;
    let den = total * (sa + sb) - 2 * sa * sb;
    if den == 0 {
        if rows.len() == 1 && cols.len() == 1 && a.len() > 1 {
            log::warn!("both partitions put every item in one cluster; ARI defined as 1.0");
        }
        return Ok(1.0);
    }
    Ok(num as f64 / den as f64)
}

/// Adjusted Rand index between two partitions.
pub fn ari(a: &Partition, b: &Partition) -> Result<f64, ClusterError> {
    ari_labels(a.labels(), b.labels())
}
