//! Spearman and Kendall rank correlation with p-values, and the
//! consistent-correlation filter between quantitative and human metrics.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use crate::table::{NormalizedTable, TableError};

/// Largest sample size for which the Kendall p-value is computed from the
/// exact permutation distribution (untied data only).
pub const KENDALL_EXACT_MAX_N: usize = 30;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {min} observations, got {n}")]
    TooFew { n: usize, min: usize },
    #[error("correlation undefined: an input is constant")]
    Constant,
    #[error("inputs must be finite")]
    NonFinite,
}

/// A correlation coefficient with its two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub coef: f64,
    pub p: f64,
}

fn check(x: &[f64], y: &[f64], min: usize) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < min {
        return Err(StatsError::TooFew { n: x.len(), min });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(x) || constant(y) {
        return Err(StatsError::Constant);
    }
    Ok(())
}

/// Ranks starting at 1; tied values share the average of their ranks.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman's rho (Pearson correlation of average ranks) with a two-sided
/// p-value from the t distribution with `n − 2` degrees of freedom.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    check(x, y, 4)?;
    let rho = pearson(&average_ranks(x), &average_ranks(y));
    Ok(Correlation {
        coef: rho,
        p: spearman_p(rho, x.len()),
    })
}

/// Two-sided p-value of Spearman's rho under the t approximation.
pub fn spearman_p(rho: f64, n: usize) -> f64 {
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Pair counts behind Kendall's tau-b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KendallCounts {
    pub n: usize,
    /// Concordant minus discordant pairs.
    pub s: i64,
    /// Pairs tied in x (including joint ties).
    pub tied_x: i64,
    /// Pairs tied in y (including joint ties).
    pub tied_y: i64,
    pub discordant: i64,
    pub concordant: i64,
}

fn tie_pairs(sorted: &[f64]) -> i64 {
    let mut total = 0i64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as i64;
        total += t * (t - 1) / 2;
        i = j + 1;
    }
    total
}

/// Merge sort counting inversions (strict).
fn sort_count_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> i64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_count_swaps(&mut v[..mid], buf) + sort_count_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as i64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// O(n log n) pair counting (Knight's algorithm).
pub fn kendall_counts(x: &[f64], y: &[f64]) -> KendallCounts {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    let tied_x = tie_pairs(&xs);
    let mut joint = 0i64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[j + 1] == xs[i] && ys[j + 1] == ys[i] {
            j += 1;
        }
        let t = (j - i + 1) as i64;
        joint += t * (t - 1) / 2;
        i = j + 1;
    }
    let mut buf = Vec::with_capacity(n);
    let discordant = sort_count_swaps(&mut ys, &mut buf);
    let tied_y = tie_pairs(&ys);
    let total = (n as i64) * (n as i64 - 1) / 2;
    let concordant = total - tied_x - tied_y + joint - discordant;
    KendallCounts {
        n,
        s: concordant - discordant,
        tied_x,
        tied_y,
        discordant,
        concordant,
    }
}

/// Kendall's tau-b without a p-value; needs only two observations.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check(x, y, 2)?;
    let c = kendall_counts(x, y);
    Ok(tau_from_counts(&c))
}

fn tau_from_counts(c: &KendallCounts) -> f64 {
    let total = (c.n as i64) * (c.n as i64 - 1) / 2;
    let denom = (((total - c.tied_x) as f64) * ((total - c.tied_y) as f64)).sqrt();
    (c.s as f64 / denom).clamp(-1.0, 1.0)
}

/// Kendall's tau-b with a two-sided p-value.
///
/// Untied samples with `n ≤ 30` use the exact permutation distribution;
/// otherwise the tie-adjusted normal approximation.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    check(x, y, 4)?;
    let c = kendall_counts(x, y);
    let tau = tau_from_counts(&c);
    let untied = c.tied_x == 0 && c.tied_y == 0;
    let p = if untied && c.n <= KENDALL_EXACT_MAX_N {
        kendall_exact_p(c.n, c.discordant.min(c.concordant) as usize)
    } else {
        kendall_normal_p(x, y, c.s)
    };
    Ok(Correlation { coef: tau, p })
}

/// Two-sided exact p-value: `2·P(D ≤ c)` where `D` counts inversions of a
/// uniformly random permutation of `n` items.
pub fn kendall_exact_p(n: usize, c: usize) -> f64 {
    assert!(n <= 33, "exact Kendall distribution overflows beyond n=33");
    let max = n * (n - 1) / 2;
    // Mahonian numbers: permutations of n items with k inversions.
    let mut counts = vec![0u128; max + 1];
    counts[0] = 1;
    for m in 2..=n {
        let top = m * (m - 1) / 2;
        let mut next = vec![0u128; max + 1];
        let mut window = 0u128;
        for k in 0..=top {
            window += counts[k];
            if k >= m {
                window -= counts[k - m];
            }
            next[k] = window;
        }
        counts = next;
    }
    let total: u128 = counts.iter().sum();
    let tail: u128 = counts[..=c.min(max)].iter().sum();
    (2.0 * (tail as f64 / total as f64)).min(1.0)
}

fn tie_sums(v: &[f64]) -> (f64, f64, f64) {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(f64::total_cmp);
    let (mut pairs, mut cubic, mut var) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < s.len() {
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        if t > 1.0 {
            pairs += t * (t - 1.0) / 2.0;
            cubic += t * (t - 1.0) * (t - 2.0);
            var += t * (t - 1.0) * (2.0 * t + 5.0);
        }
        i = j + 1;
    }
    (pairs, cubic, var)
}

/// Two-sided p-value from the tie-adjusted normal approximation of `S`.
pub fn kendall_normal_p(x: &[f64], y: &[f64], s: i64) -> f64 {
    let n = x.len() as f64;
    let (xp, xc, xv) = tie_sums(x);
    let (yp, yc, yv) = tie_sums(y);
    let m = n * (n - 1.0);
    let var = (m * (2.0 * n + 5.0) - xv - yv) / 18.0 + (2.0 * xp * yp) / m + xc * yc / (9.0 * m * (n - 2.0));
    if var <= 0.0 {
        return 1.0;
    }
    let z = s as f64 / var.sqrt();
    erfc(z.abs() / SQRT_2).min(1.0)
}

/// Acceptance thresholds for a consistent correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub rho_min: f64,
    pub tau_min: f64,
    pub p_max_rho: f64,
    pub p_max_tau: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            rho_min: 0.4,
            tau_min: 0.25,
            p_max_rho: 0.05,
            p_max_tau: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryStatus {
    Ok,
    /// Fewer than four paired observations.
    InsufficientData,
    /// One of the paired columns is constant.
    Undefined,
}

impl EntryStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryStatus::Ok => "ok",
            EntryStatus::InsufficientData => "insufficient_data",
            EntryStatus::Undefined => "undefined",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEntry {
    pub qm_name: String,
    pub hm_name: String,
    pub n: usize,
    pub status: EntryStatus,
    pub spearman: Option<Correlation>,
    pub kendall: Option<Correlation>,
    pub consistent: bool,
    /// Mean of `|rho|` and `|tau|`.
    pub strength: Option<f64>,
}

fn entry(qm_name: &str, hm_name: &str, x: &[f64], y: &[f64], thr: &Thresholds) -> CorrelationEntry {
    let mut e = CorrelationEntry {
        qm_name: qm_name.to_string(),
        hm_name: hm_name.to_string(),
        n: x.len(),
        status: EntryStatus::Ok,
        spearman: None,
        kendall: None,
        consistent: false,
        strength: None,
    };
    match (spearman(x, y), kendall(x, y)) {
        (Ok(r), Ok(t)) => {
            e.consistent = r.coef.abs() > thr.rho_min
                && t.coef.abs() > thr.tau_min
                && r.p < thr.p_max_rho
                && t.p < thr.p_max_tau;
            e.strength = Some((r.coef.abs() + t.coef.abs()) / 2.0);
            e.spearman = Some(r);
            e.kendall = Some(t);
        }
        (Err(StatsError::TooFew { .. }), _) => e.status = EntryStatus::InsufficientData,
        _ => e.status = EntryStatus::Undefined,
    }
    e
}

/// Correlates every quantitative column with every human column.
///
/// Rows are matched by experiment id; experiments missing a value in either
/// column are dropped for that pair only.
pub fn consistent_correlations(
    qm: &NormalizedTable,
    hm: &NormalizedTable,
    thr: &Thresholds,
) -> Result<Vec<CorrelationEntry>, TableError> {
    let hm = hm.aligned_to(&qm.keys)?;
    let pairs: Vec<(usize, usize)> = (0..qm.columns.len())
        .flat_map(|i| (0..hm.columns.len()).map(move |j| (i, j)))
        .collect();
    Ok(pairs
        .par_iter()
        .map(|&(i, j)| {
            let (x, y): (Vec<f64>, Vec<f64>) = qm
                .cells
                .iter()
                .zip(&hm.cells)
                .filter_map(|(q, h)| Some((q[i]?, h[j]?)))
                .unzip();
            entry(&qm.columns[i], &hm.columns[j], &x, &y, thr)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spearman_identity_and_reversal() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap().coef, 1.0);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.coef, -1.0);
        assert_eq!(r.p, 0.0);
    }

    #[test]
    fn spearman_hand_case() {
        // d = (-1, 1, -1, 1), Σd² = 4 → 1 − 24/60 = 0.6
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert_abs_diff_eq!(r.coef, 0.6, epsilon = 1e-12);
        // t = 0.6·sqrt(2 / 0.64) = 1.06066; two-sided p with 2 df
        let t: f64 = 0.6 * (2.0f64 / 0.64).sqrt();
        let p_oracle = 1.0 - t / (2.0 + t * t).sqrt();
        assert_abs_diff_eq!(r.p, p_oracle, epsilon = 1e-9);
    }

    #[test]
    fn kendall_hand_case() {
        // pairs: (1,2) D, (1,3) C, (1,4) C, (2,3) C, (2,4) C, (3,4) D → (4 − 2)/6
        let r = kendall(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert_abs_diff_eq!(r.coef, 1.0 / 3.0, epsilon = 1e-15);
        // 2 discordant: P(D ≤ 2) for n = 4 is (1 + 3 + 5)/24
        assert_abs_diff_eq!(r.p, 2.0 * 9.0 / 24.0, epsilon = 1e-15);
        assert_eq!(kendall(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap().coef, 1.0);
        assert_eq!(kendall(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap().coef, -1.0);
    }

    #[test]
    fn mahonian_distribution_sums_to_one() {
        // D ≤ max is certain
        assert_eq!(kendall_exact_p(6, 15), 1.0);
        // n = 3: counts (1, 2, 2, 1); P(D ≤ 0) = 1/6
        assert_abs_diff_eq!(kendall_exact_p(3, 0), 2.0 / 6.0, epsilon = 1e-15);
        assert!(kendall_exact_p(30, 0) > 0.0);
    }

    #[test]
    fn constant_input_is_undefined() {
        assert_eq!(spearman(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0]), Err(StatsError::Constant));
        assert_eq!(kendall(&[1.0, 2.0, 3.0, 4.0], &[2.0; 4]), Err(StatsError::Constant));
    }

    #[test]
    fn too_short_input() {
        assert!(matches!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Err(StatsError::TooFew { .. })));
        assert_eq!(kendall_tau_b(&[1.0, 2.0], &[2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn tau_b_stays_bounded_under_heavy_ties() {
        let x = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0];
        let y = [1.0, 1.0, 2.0, 2.0, 2.0, 3.0, 3.0];
        let t = kendall(&x, &y).unwrap();
        assert!((-1.0..=1.0).contains(&t.coef));
        assert!((0.0..=1.0).contains(&t.p));
    }
}
