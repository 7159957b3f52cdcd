//! Experiment-by-metric tables exchanged between the analysis stages.

use std::collections::HashMap;

use crate::metrics::{MetricVector, QmMetric};
use crate::model::ExperimentRecord;

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("experiment '{0}' is missing from the table")]
    MissingExperiment(String),
    #[error("column '{column}' has a missing value for experiment '{experiment}'")]
    MissingValue { column: String, experiment: String },
    #[error("column '{0}' has no values")]
    EmptyColumn(String),
}

/// Identity of one experiment row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RowKey {
    pub experiment_id: String,
    pub scenario_id: String,
    pub run_index: u32,
}

impl RowKey {
    pub fn of(rec: &ExperimentRecord) -> Self {
        RowKey {
            experiment_id: rec.experiment_id.clone(),
            scenario_id: rec.scenario_id.clone(),
            run_index: rec.run_index,
        }
    }
}

/// Raw metric values, one [`MetricVector`] per experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub keys: Vec<RowKey>,
    pub rows: Vec<MetricVector>,
}

impl MetricTable {
    pub fn new(keys: Vec<RowKey>, rows: Vec<MetricVector>) -> Self {
        assert_eq!(keys.len(), rows.len(), "one metric vector per key");
        MetricTable { keys, rows }
    }

    pub fn column(&self, m: QmMetric) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.get(m)).collect()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Whether a table holds quantitative or human (survey) metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Qm,
    Hm,
}

/// Scores in `[0, 1]` with per-cell missing markers.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTable {
    pub provenance: Provenance,
    pub columns: Vec<String>,
    pub keys: Vec<RowKey>,
    pub cells: Vec<Vec<Option<f64>>>,
    /// Scaled standard deviations; only survey tables carry them.
    pub stds: Option<Vec<Vec<Option<f64>>>>,
    /// Cells filled in by imputation rather than observed.
    pub imputed: Vec<Vec<bool>>,
}

impl NormalizedTable {
    pub fn new(provenance: Provenance, columns: Vec<String>, keys: Vec<RowKey>, cells: Vec<Vec<Option<f64>>>) -> Self {
        assert_eq!(keys.len(), cells.len());
        assert!(cells.iter().all(|r| r.len() == columns.len()));
        let imputed = cells.iter().map(|r| vec![false; r.len()]).collect();
        NormalizedTable {
            provenance,
            columns,
            keys,
            cells,
            stds: None,
            imputed,
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize, TableError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| TableError::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>, TableError> {
        let j = self.column_index(name)?;
        Ok(self.cells.iter().map(|r| r[j]).collect())
    }

    /// Dense feature matrix over the named columns; fails on any missing cell.
    pub fn features(&self, columns: &[usize]) -> Result<Vec<Vec<f64>>, TableError> {
        self.cells
            .iter()
            .zip(&self.keys)
            .map(|(row, key)| {
                columns
                    .iter()
                    .map(|&j| {
                        row[j].ok_or_else(|| TableError::MissingValue {
                            column: self.columns[j].clone(),
                            experiment: key.experiment_id.clone(),
                        })
                    })
                    .collect()
            })
            .collect()
    }

    pub fn all_features(&self) -> Result<Vec<Vec<f64>>, TableError> {
        let all: Vec<usize> = (0..self.columns.len()).collect();
        self.features(&all)
    }

    /// Reorders rows to follow `keys`, copying scenario and run information
    /// from them. Every key must be present.
    pub fn aligned_to(&self, keys: &[RowKey]) -> Result<NormalizedTable, TableError> {
        let index: HashMap<&str, usize> = self
            .keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.experiment_id.as_str(), i))
            .collect();
        let order = keys
            .iter()
            .map(|k| {
                index
                    .get(k.experiment_id.as_str())
                    .copied()
                    .ok_or_else(|| TableError::MissingExperiment(k.experiment_id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(NormalizedTable {
            provenance: self.provenance,
            columns: self.columns.clone(),
            keys: keys.to_vec(),
            cells: order.iter().map(|&i| self.cells[i].clone()).collect(),
            stds: self.stds.as_ref().map(|s| order.iter().map(|&i| s[i].clone()).collect()),
            imputed: order.iter().map(|&i| self.imputed[i].clone()).collect(),
        })
    }
}
