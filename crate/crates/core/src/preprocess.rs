//! Per-scenario normalization of quantitative metrics, Likert scaling of the
//! survey and missing-value handling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metrics::QmMetric;
use crate::model::{HmMetric, SurveyTable};
use crate::table::{MetricTable, NormalizedTable, Provenance, RowKey};

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("scenario '{scenario}' has {runs} run(s); normalization needs at least 2")]
    TooFewRuns { scenario: String, runs: usize },
    #[error("metric {metric} of experiment '{experiment}' is negative ({value})")]
    NegativeValue { metric: QmMetric, experiment: String, value: f64 },
    #[error("experiment '{0}' has no human metric values to impute from")]
    NothingToImpute(String),
    #[error("column '{0}' has no values to impute from")]
    EmptyColumn(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "high")]
    HigherBetter,
    #[serde(rename = "low")]
    LowerBetter,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" | "higher" | "higher_better" => Ok(Direction::HigherBetter),
            "low" | "lower" | "lower_better" => Ok(Direction::LowerBetter),
            other => Err(format!("unknown direction '{other}' (expected high|low)")),
        }
    }
}

/// Whether each metric is better high or low. Always covers all eleven.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionalityMap([Direction; 11]);

impl Default for DirectionalityMap {
    fn default() -> Self {
        use Direction::*;
        // TTG PL CHC ARV SW SW_s AMD PR_I PR_PE PR_S PR_PU
        DirectionalityMap([
            LowerBetter,
            LowerBetter,
            LowerBetter,
            HigherBetter,
            LowerBetter,
            LowerBetter,
            HigherBetter,
            LowerBetter,
            LowerBetter,
            HigherBetter,
            HigherBetter,
        ])
    }
}

impl DirectionalityMap {
    pub fn get(&self, m: QmMetric) -> Direction {
        self.0[m as usize]
    }

    pub fn set(&mut self, m: QmMetric, d: Direction) {
        self.0[m as usize] = d;
    }
}

/// How a run's value is mapped to `[0, 1]` within its scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    /// Share of the best value: `best/value` or `value/best`.
    #[default]
    Ratio,
    /// Linear map sending the worst run to 0 and the best to 1.
    MinMax,
}

impl FromStr for NormMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ratio" => Ok(NormMode::Ratio),
            "minmax" => Ok(NormMode::MinMax),
            other => Err(format!("unknown normalization '{other}' (expected ratio|minmax)")),
        }
    }
}

impl fmt::Display for NormMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormMode::Ratio => "ratio",
            NormMode::MinMax => "minmax",
        })
    }
}

/// Normalizes one scenario's values of one metric. Missing stay missing.
pub fn normalize_group(values: &[Option<f64>], dir: Direction, mode: NormMode, label: &str) -> Vec<Option<f64>> {
    let present = values.iter().flatten().copied();
    let (best, worst) = match dir {
        Direction::LowerBetter => (
            present.clone().fold(f64::INFINITY, f64::min),
            present.fold(f64::NEG_INFINITY, f64::max),
        ),
        Direction::HigherBetter => (
            present.clone().fold(f64::NEG_INFINITY, f64::max),
            present.fold(f64::INFINITY, f64::min),
        ),
    };
    if !best.is_finite() {
        return values.to_vec();
    }
    if best == worst {
        if best == 0.0 {
            log::warn!("{label}: all values are zero, every run scores 1.0");
        }
        return values.iter().map(|v| v.map(|_| 1.0)).collect();
    }
    values
        .iter()
        .map(|v| {
            v.map(|v| {
                let score = match (mode, dir) {
                    (_, _) if v == best => 1.0,
                    (NormMode::Ratio, Direction::LowerBetter) => {
                        if v == 0.0 {
                            log::warn!("{label}: zero value with non-zero best, capped at 1.0");
                            1.0
                        } else {
                            best / v
                        }
                    }
                    (NormMode::Ratio, Direction::HigherBetter) => v / best,
                    (NormMode::MinMax, _) => (v - worst) / (best - worst),
                };
                score.clamp(0.0, 1.0)
            })
        })
        .collect()
}

/// Scores each run against the best run of its scenario, per metric.
pub fn normalize_qm(
    raw: &MetricTable,
    dir: &DirectionalityMap,
    mode: NormMode,
) -> Result<NormalizedTable, PreprocessError> {
    let mut scenarios: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, key) in raw.keys.iter().enumerate() {
        scenarios.entry(key.scenario_id.as_str()).or_default().push(i);
    }
    let mut cells = vec![vec![None; QmMetric::ALL.len()]; raw.len()];
    for (scenario, rows) in &scenarios {
        if rows.len() < 2 {
            return Err(PreprocessError::TooFewRuns {
                scenario: scenario.to_string(),
                runs: rows.len(),
            });
        }
        for (j, m) in QmMetric::ALL.into_iter().enumerate() {
            let values: Vec<Option<f64>> = rows.iter().map(|&i| raw.rows[i].get(m)).collect();
            for (&i, v) in rows.iter().zip(&values) {
                if let Some(v) = v {
                    if *v < 0.0 {
                        return Err(PreprocessError::NegativeValue {
                            metric: m,
                            experiment: raw.keys[i].experiment_id.clone(),
                            value: *v,
                        });
                    }
                }
            }
            let scores = normalize_group(&values, dir.get(m), mode, &format!("{scenario}/{m}"));
            for (&i, s) in rows.iter().zip(scores) {
                cells[i][j] = s;
            }
        }
    }
    Ok(NormalizedTable::new(
        Provenance::Qm,
        QmMetric::ALL.iter().map(|m| m.name().to_string()).collect(),
        raw.keys.clone(),
        cells,
    ))
}

/// Divides survey means and standard deviations by 5. Rows only carry the
/// experiment id; align against dataset keys to attach scenario info.
pub fn scale_hm(survey: &SurveyTable) -> NormalizedTable {
    let keys = survey
        .rows()
        .iter()
        .map(|r| RowKey {
            experiment_id: r.experiment_id.clone(),
            scenario_id: String::new(),
            run_index: 0,
        })
        .collect();
    let cells = survey
        .rows()
        .iter()
        .map(|r| r.entries.iter().map(|e| e.map(|e| e.mean / 5.0)).collect())
        .collect();
    let stds = survey
        .rows()
        .iter()
        .map(|r| r.entries.iter().map(|e| e.map(|e| e.std / 5.0)).collect())
        .collect();
    let mut table = NormalizedTable::new(
        Provenance::Hm,
        HmMetric::ALL.iter().map(|m| m.name().to_string()).collect(),
        keys,
        cells,
    );
    table.stds = Some(stds);
    table
}

/// Replaces each missing survey cell with the mean of the same experiment's
/// present cells and flags it as imputed.
pub fn impute_hm_for_clustering(hm: &NormalizedTable) -> Result<NormalizedTable, PreprocessError> {
    let mut out = hm.clone();
    for (i, row) in out.cells.iter_mut().enumerate() {
        let present: Vec<f64> = row.iter().flatten().copied().collect();
        if present.is_empty() {
            return Err(PreprocessError::NothingToImpute(hm.keys[i].experiment_id.clone()));
        }
        let mean = present.iter().sum::<f64>() / present.len() as f64;
        for (j, cell) in row.iter_mut().enumerate() {
            if cell.is_none() {
                *cell = Some(mean);
                out.imputed[i][j] = true;
            }
        }
    }
    Ok(out)
}

/// Fills missing cells with the mean of their column's present values and
/// flags them as imputed. Used to build complete quantitative feature
/// matrices (e.g. AMD of a run in which nobody was tracked).
pub fn impute_columns_with_mean(table: &NormalizedTable) -> Result<NormalizedTable, PreprocessError> {
    let mut out = table.clone();
    for j in 0..table.columns.len() {
        if table.cells.iter().all(|r| r[j].is_some()) {
            continue;
        }
        let present: Vec<f64> = table.cells.iter().filter_map(|r| r[j]).collect();
        if present.is_empty() {
            return Err(PreprocessError::EmptyColumn(table.columns[j].clone()));
        }
        let mean = present.iter().sum::<f64>() / present.len() as f64;
        for (i, row) in out.cells.iter_mut().enumerate() {
            if row[j].is_none() {
                row[j] = Some(mean);
                out.imputed[i][j] = true;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricVector;
    use crate::model::{HmEntry, SurveyRow};
    use approx::assert_abs_diff_eq;

    fn lower(values: &[f64]) -> Vec<f64> {
        let v: Vec<Option<f64>> = values.iter().map(|&x| Some(x)).collect();
        normalize_group(&v, Direction::LowerBetter, NormMode::Ratio, "t")
            .into_iter()
            .map(Option::unwrap)
            .collect()
    }

    #[test]
    fn ratio_to_best_lower() {
        assert_eq!(lower(&[10.0, 12.5, 20.0]), vec![1.0, 0.8, 0.5]);
    }

    #[test]
    fn ratio_to_best_higher() {
        let s = normalize_group(&[Some(0.3), Some(0.6)], Direction::HigherBetter, NormMode::Ratio, "t");
        assert_eq!(s, vec![Some(0.5), Some(1.0)]);
    }

    #[test]
    fn ties_all_score_one() {
        assert_eq!(lower(&[7.0, 7.0, 7.0]), vec![1.0; 3]);
        assert_eq!(lower(&[0.0, 0.0]), vec![1.0; 2]);
    }

    #[test]
    fn zero_is_best_for_lower() {
        // intimate-space occupancy: a run that never entered it is best
        assert_eq!(lower(&[0.0, 5.0, 10.0]), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn minmax_sends_worst_to_zero() {
        let v = [Some(10.0), Some(12.5), Some(20.0)];
        let s = normalize_group(&v, Direction::LowerBetter, NormMode::MinMax, "t");
        assert_eq!(s, vec![Some(1.0), Some(0.75), Some(0.0)]);
    }

    #[test]
    fn missing_values_stay_missing() {
        let s = normalize_group(&[None, Some(2.0), Some(4.0)], Direction::HigherBetter, NormMode::Ratio, "t");
        assert_eq!(s, vec![None, Some(0.5), Some(1.0)]);
    }

    fn mv(ttg: f64) -> MetricVector {
        MetricVector {
            ttg,
            pl: 1.0,
            chc: 1.0,
            arv: 0.3,
            sw: 1.0,
            sw_s: 0.1,
            amd: Some(1.0),
            pr_i: 0.0,
            pr_pe: 0.0,
            pr_s: 50.0,
            pr_pu: 50.0,
        }
    }

    fn key(id: &str, scenario: &str, run: u32) -> RowKey {
        RowKey {
            experiment_id: id.into(),
            scenario_id: scenario.into(),
            run_index: run,
        }
    }

    #[test]
    fn normalize_qm_groups_by_scenario() {
        let raw = MetricTable::new(
            vec![key("a1", "a", 1), key("b1", "b", 1), key("a2", "a", 2), key("b2", "b", 2)],
            vec![mv(10.0), mv(3.0), mv(20.0), mv(6.0)],
        );
        let t = normalize_qm(&raw, &DirectionalityMap::default(), NormMode::Ratio).unwrap();
        let ttg = t.column("TTG").unwrap();
        assert_eq!(ttg, vec![Some(1.0), Some(1.0), Some(0.5), Some(0.5)]);
    }

    #[test]
    fn single_run_scenario_is_an_error() {
        let raw = MetricTable::new(vec![key("a1", "a", 1)], vec![mv(1.0)]);
        assert!(matches!(
            normalize_qm(&raw, &DirectionalityMap::default(), NormMode::Ratio),
            Err(PreprocessError::TooFewRuns { .. })
        ));
    }

    fn survey(rows: &[(&str, [Option<f64>; 4])]) -> SurveyTable {
        SurveyTable::new(
            rows.iter()
                .map(|(id, means)| SurveyRow {
                    experiment_id: id.to_string(),
                    entries: means.map(|m| {
                        m.map(|mean| HmEntry {
                            mean,
                            std: 1.0,
                            n_responses: 70,
                        })
                    }),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn hm_scaled_by_five() {
        let t = scale_hm(&survey(&[("e", [Some(4.0), Some(5.0), None, Some(1.0)])]));
        assert_eq!(t.cells[0], vec![Some(0.8), Some(1.0), None, Some(0.2)]);
        assert_eq!(t.stds.as_ref().unwrap()[0][0], Some(0.2));
    }

    #[test]
    fn imputation_uses_row_mean() {
        let t = scale_hm(&survey(&[
            ("a", [None, Some(3.0), Some(3.5), Some(4.0)]),
            ("b", [Some(1.0), Some(2.0), Some(3.0), Some(4.0)]),
            ("c", [None, Some(2.5), Some(2.5), Some(2.5)]),
        ]));
        let imp = impute_hm_for_clustering(&t).unwrap();
        assert_abs_diff_eq!(imp.cells[0][0].unwrap(), 0.7, epsilon = 1e-12);
        assert!(imp.imputed[0][0]);
        assert!(!imp.imputed[0][1]);
        assert_eq!(imp.cells[1], t.cells[1]);
        assert_abs_diff_eq!(imp.cells[2][0].unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn imputation_fails_on_empty_row() {
        let t = scale_hm(&survey(&[("a", [None, None, None, None])]));
        assert!(impute_hm_for_clustering(&t).is_err());
    }
}
