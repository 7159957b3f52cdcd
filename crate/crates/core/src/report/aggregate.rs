use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::metrics::QmMetric;
use crate::model::HmMetric;
use crate::rank_stats::kendall_tau_b;
use crate::table::NormalizedTable;

/// A named set of columns averaged into one score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSetSpec {
    pub name: String,
    pub members: Vec<String>,
}

impl MetricSetSpec {
    /// Set of quantitative metrics; names are matched case-insensitively
    /// and stored in canonical form and order.
    pub fn qm<S: AsRef<str>>(name: &str, members: &[S]) -> Result<Self, ReportError> {
        let mut parsed = members
            .iter()
            .map(|m| m.as_ref().parse::<QmMetric>().map_err(ReportError::Config))
            .collect::<Result<Vec<_>, _>>()?;
        parsed.sort();
        parsed.dedup();
        if parsed.is_empty() {
            return Err(ReportError::Config(format!("metric set '{name}' has no members")));
        }
        Ok(MetricSetSpec {
            name: name.to_string(),
            members: parsed.iter().map(|m| m.name().to_string()).collect(),
        })
    }

    pub fn full_qm() -> Self {
        MetricSetSpec {
            name: "qm_full".into(),
            members: QmMetric::ALL.iter().map(|m| m.name().to_string()).collect(),
        }
    }

    /// Time to goal, speed, intimate and social occupancy, and distance to
    /// people.
    pub fn default_optimal() -> Self {
        MetricSetSpec::qm("qm_optimal", &["TTG", "ARV", "PR_I", "PR_S", "AMD"]).expect("valid names")
    }

    pub fn hm() -> Self {
        MetricSetSpec {
            name: "hm".into(),
            members: HmMetric::ALL.iter().map(|m| m.name().to_string()).collect(),
        }
    }
}

/// Unweighted mean of the set's columns for each row, over the cells that
/// are present. Rows with no present member cell score `None`.
pub fn aggregate(norm: &NormalizedTable, set: &MetricSetSpec) -> Result<Vec<Option<f64>>, ReportError> {
    if set.members.is_empty() {
        return Err(ReportError::Config(format!("metric set '{}' has no members", set.name)));
    }
    let cols = set
        .members
        .iter()
        .map(|m| norm.column_index(m))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(norm
        .cells
        .iter()
        .map(|row| {
            let present: Vec<f64> = cols.iter().filter_map(|&j| row[j]).collect();
            (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
        })
        .collect())
}

/// Per-run aggregate scores. HM fields are `None` without a survey.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub experiment_id: String,
    pub scenario_id: String,
    pub run_index: u32,
    pub hm_mean: Option<f64>,
    /// Mean of the scaled per-question standard deviations.
    pub hm_std: Option<f64>,
    pub qm_full: Option<f64>,
    pub qm_optimal: Option<f64>,
}

/// Builds aggregate rows in the order of `qm`'s keys. `hm` is aligned to
/// those keys first.
pub fn aggregate_rows(
    qm: &NormalizedTable,
    hm: Option<&NormalizedTable>,
    full: &MetricSetSpec,
    optimal: &MetricSetSpec,
) -> Result<Vec<AggregateRow>, ReportError> {
    let qm_full = aggregate(qm, full)?;
    let qm_optimal = aggregate(qm, optimal)?;
    let (hm_mean, hm_std) = match hm {
        Some(hm) => {
            let hm = hm.aligned_to(&qm.keys)?;
            let means = aggregate(&hm, &MetricSetSpec::hm())?;
            let stds = match &hm.stds {
                Some(stds) => stds
                    .iter()
                    .map(|row| {
                        let present: Vec<f64> = row.iter().flatten().copied().collect();
                        (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
                    })
                    .collect(),
                None => vec![None; hm.len()],
            };
            (means, stds)
        }
        None => (vec![None; qm.len()], vec![None; qm.len()]),
    };
    Ok(qm
        .keys
        .iter()
        .enumerate()
        .map(|(i, key)| AggregateRow {
            experiment_id: key.experiment_id.clone(),
            scenario_id: key.scenario_id.clone(),
            run_index: key.run_index,
            hm_mean: hm_mean[i],
            hm_std: hm_std[i],
            qm_full: qm_full[i],
            qm_optimal: qm_optimal[i],
        })
        .collect())
}

/// The aggregate variants compared against the survey.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    QmFull,
    QmOptimal,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::QmFull, Variant::QmOptimal];

    pub fn name(self) -> &'static str {
        match self {
            Variant::QmFull => "qm_full",
            Variant::QmOptimal => "qm_optimal",
        }
    }

    fn score(self, row: &AggregateRow) -> Option<f64> {
        match self {
            Variant::QmFull => row.qm_full,
            Variant::QmOptimal => row.qm_optimal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantTrend {
    pub variant: Variant,
    /// Kendall tau-b between HM and QM scores over the scenario's runs;
    /// `None` when either side is constant.
    pub tau: Option<f64>,
    pub best_match: bool,
    pub worst_match: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTrend {
    pub scenario_id: String,
    pub n_runs: usize,
    pub variants: Vec<VariantTrend>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendSummary {
    pub variant: Variant,
    pub n_scenarios: usize,
    /// Mean tau over scenarios where it is defined.
    pub mean_tau: Option<f64>,
    pub best_match_fraction: f64,
    pub worst_match_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub scenarios: Vec<ScenarioTrend>,
    pub summary: Vec<TrendSummary>,
}

/// Run indices holding the extreme score.
fn extreme_runs(scores: &[f64], runs: &[u32], best: bool) -> Vec<u32> {
    let target = if best {
        scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        scores.iter().copied().fold(f64::INFINITY, f64::min)
    };
    runs.iter().zip(scores).filter(|(_, &s)| s == target).map(|(&r, _)| r).collect()
}

/// Compares how the QM aggregates rank each scenario's runs with how the
/// survey ranks them. Only runs with both scores take part; scenarios left
/// with fewer than two runs are skipped.
pub fn trend_agreement(rows: &[AggregateRow]) -> TrendReport {
    let mut by_scenario: BTreeMap<&str, Vec<&AggregateRow>> = BTreeMap::new();
    for r in rows {
        by_scenario.entry(r.scenario_id.as_str()).or_default().push(r);
    }
    let mut scenarios = Vec::new();
    for (scenario, runs) in by_scenario {
        let mut variants = Vec::new();
        let mut n_runs = 0;
        for v in Variant::ALL {
            let paired: Vec<(u32, f64, f64)> = runs
                .iter()
                .filter_map(|r| Some((r.run_index, r.hm_mean?, v.score(r)?)))
                .collect();
            n_runs = n_runs.max(paired.len());
            if paired.len() < 2 {
                continue;
            }
            let ids: Vec<u32> = paired.iter().map(|p| p.0).collect();
            let hm: Vec<f64> = paired.iter().map(|p| p.1).collect();
            let qm: Vec<f64> = paired.iter().map(|p| p.2).collect();
            variants.push(VariantTrend {
                variant: v,
                tau: kendall_tau_b(&hm, &qm).ok().filter(|t| t.is_finite()),
                best_match: extreme_runs(&hm, &ids, true) == extreme_runs(&qm, &ids, true),
                worst_match: extreme_runs(&hm, &ids, false) == extreme_runs(&qm, &ids, false),
            });
        }
        if variants.is_empty() {
            log::warn!("scenario '{scenario}' has fewer than 2 runs with both scores; skipped in trend agreement");
            continue;
        }
        scenarios.push(ScenarioTrend {
            scenario_id: scenario.to_string(),
            n_runs,
            variants,
        });
    }
    let summary = Variant::ALL
        .iter()
        .map(|&v| {
            let entries: Vec<&VariantTrend> = scenarios
                .iter()
                .flat_map(|s| s.variants.iter().filter(move |t| t.variant == v))
                .collect();
            let n = entries.len();
            let taus: Vec<f64> = entries.iter().filter_map(|t| t.tau).collect();
            let frac = |f: &dyn Fn(&VariantTrend) -> bool| {
                if n == 0 {
                    0.0
                } else {
                    entries.iter().filter(|t| f(t)).count() as f64 / n as f64
                }
            };
            TrendSummary {
                variant: v,
                n_scenarios: n,
                mean_tau: (!taus.is_empty()).then(|| taus.iter().sum::<f64>() / taus.len() as f64),
                best_match_fraction: frac(&|t| t.best_match),
                worst_match_fraction: frac(&|t| t.worst_match),
            }
        })
        .collect();
    TrendReport { scenarios, summary }
}

/// Least-squares fit `hm ≈ slope·qm + intercept` over runs with both
/// scores. Informational only; scores are never rescaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFit {
    pub variant: Variant,
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn affine_fit(rows: &[AggregateRow], variant: Variant) -> Option<AffineFit> {
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((variant.score(r)?, r.hm_mean?))).collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(AffineFit {
        variant,
        n,
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Provenance, RowKey};
    use approx::assert_abs_diff_eq;

    fn key(id: &str, scenario: &str, run: u32) -> RowKey {
        RowKey {
            experiment_id: id.into(),
            scenario_id: scenario.into(),
            run_index: run,
        }
    }

    fn row(scenario: &str, run: u32, hm: f64, qm: f64) -> AggregateRow {
        AggregateRow {
            experiment_id: format!("{scenario}_{run}"),
            scenario_id: scenario.into(),
            run_index: run,
            hm_mean: Some(hm),
            hm_std: Some(0.1),
            qm_full: Some(qm),
            qm_optimal: Some(qm),
        }
    }

    #[test]
    fn hm_present_only_mean() {
        let t = NormalizedTable::new(
            Provenance::Hm,
            MetricSetSpec::hm().members,
            vec![key("a", "s", 1), key("b", "s", 2)],
            vec![
                vec![Some(0.8); 4],
                vec![None, Some(0.6), Some(0.9), Some(0.9)],
            ],
        );
        let s = aggregate(&t, &MetricSetSpec::hm()).unwrap();
        assert_abs_diff_eq!(s[0].unwrap(), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1].unwrap(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn optimal_set_mean() {
        let full = MetricSetSpec::full_qm();
        let mut cells = vec![None; 11];
        for (name, v) in [("TTG", 1.0), ("ARV", 0.5), ("PR_I", 1.0), ("PR_S", 0.5), ("AMD", 0.5)] {
            cells[full.members.iter().position(|m| m == name).unwrap()] = Some(v);
        }
        let t = NormalizedTable::new(Provenance::Qm, full.members.clone(), vec![key("a", "s", 1)], vec![cells]);
        let s = aggregate(&t, &MetricSetSpec::default_optimal()).unwrap();
        assert_abs_diff_eq!(s[0].unwrap(), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn unknown_member_is_an_error() {
        assert!(MetricSetSpec::qm("x", &["TTG", "NOPE"]).is_err());
        assert!(MetricSetSpec::qm::<&str>("x", &[]).is_err());
        let t = NormalizedTable::new(Provenance::Qm, vec!["TTG".into()], vec![key("a", "s", 1)], vec![vec![Some(1.0)]]);
        assert!(aggregate(&t, &MetricSetSpec::default_optimal()).is_err());
    }

    #[test]
    fn trend_identical_and_reversed() {
        let same = [row("s", 1, 0.9, 0.8), row("s", 2, 0.7, 0.6), row("s", 3, 0.5, 0.4)];
        let r = trend_agreement(&same);
        let v = &r.scenarios[0].variants[0];
        assert_eq!((v.tau, v.best_match, v.worst_match), (Some(1.0), true, true));

        let rev = [row("s", 1, 0.9, 0.4), row("s", 2, 0.7, 0.6), row("s", 3, 0.5, 0.8)];
        let v = trend_agreement(&rev).scenarios[0].variants[0].clone();
        assert_eq!((v.tau, v.best_match, v.worst_match), (Some(-1.0), false, false));
    }

    #[test]
    fn trend_one_swap() {
        // HM ranks runs (1, 2, 3); QM ranks them (1, 3, 2)
        let rows = [row("s", 1, 0.9, 0.9), row("s", 2, 0.7, 0.5), row("s", 3, 0.5, 0.7)];
        let v = trend_agreement(&rows).scenarios[0].variants[0].clone();
        assert_abs_diff_eq!(v.tau.unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert!(v.best_match);
        assert!(!v.worst_match);
    }

    #[test]
    fn single_run_scenario_is_skipped() {
        let rows = [row("a", 1, 0.9, 0.9), row("b", 1, 0.5, 0.5), row("b", 2, 0.6, 0.7)];
        let r = trend_agreement(&rows);
        assert_eq!(r.scenarios.len(), 1);
        assert_eq!(r.summary[0].n_scenarios, 1);
        assert_eq!(r.summary[0].best_match_fraction, 1.0);
    }

    #[test]
    fn affine_fit_recovers_line() {
        let rows = [row("s", 1, 0.5, 0.2), row("s", 2, 0.6, 0.4), row("s", 3, 0.7, 0.6)];
        let f = affine_fit(&rows, Variant::QmFull).unwrap();
        assert_abs_diff_eq!(f.slope, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
    }
}
