use std::collections::HashMap;
use std::path::Path;

use super::ModelError;

/// The four survey-derived human metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HmMetric {
    Unobtrusiveness,
    Friendliness,
    Smoothness,
    Foresight,
}

impl HmMetric {
    pub const ALL: [HmMetric; 4] = [
        HmMetric::Unobtrusiveness,
        HmMetric::Friendliness,
        HmMetric::Smoothness,
        HmMetric::Foresight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HmMetric::Unobtrusiveness => "unobtrusiveness",
            HmMetric::Friendliness => "friendliness",
            HmMetric::Smoothness => "smoothness",
            HmMetric::Foresight => "foresight",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Mean and standard deviation of Likert answers for one question.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmEntry {
    pub mean: f64,
    pub std: f64,
    pub n_responses: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyRow {
    pub experiment_id: String,
    /// Indexed by [`HmMetric::index`]; `None` when the question was not asked.
    pub entries: [Option<HmEntry>; 4],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SurveyTable {
    rows: Vec<SurveyRow>,
    index: HashMap<String, usize>,
}

impl SurveyTable {
    pub fn new(rows: Vec<SurveyRow>) -> Result<Self, ModelError> {
        let mut index = HashMap::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            for (m, entry) in HmMetric::ALL.iter().zip(&row.entries) {
                if let Some(e) = entry {
                    validate_entry(&row.experiment_id, *m, e)?;
                }
            }
            if index.insert(row.experiment_id.clone(), i).is_some() {
                return Err(ModelError::validation(
                    "survey",
                    format!("duplicate experiment_id '{}'", row.experiment_id),
                ));
            }
        }
        Ok(SurveyTable { rows, index })
    }

    pub fn rows(&self) -> &[SurveyRow] {
        &self.rows
    }

    pub fn get(&self, experiment_id: &str) -> Option<&SurveyRow> {
        self.index.get(experiment_id).map(|&i| &self.rows[i])
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn validate_entry(id: &str, metric: HmMetric, e: &HmEntry) -> Result<(), ModelError> {
    if !(1.0..=5.0).contains(&e.mean) {
        return Err(ModelError::validation(
            format!("survey row '{id}'"),
            format!("{} mean {} outside the Likert range [1, 5]", metric.name(), e.mean),
        ));
    }
    if !(e.std >= 0.0 && e.std.is_finite()) {
        return Err(ModelError::validation(
            format!("survey row '{id}'"),
            format!("{} std {} must be a finite non-negative number", metric.name(), e.std),
        ));
    }
    Ok(())
}

pub(crate) const SURVEY_HEADER: [&str; 10] = [
    "experiment_id",
    "unobtrusiveness_mean",
    "unobtrusiveness_std",
    "friendliness_mean",
    "friendliness_std",
    "smoothness_mean",
    "smoothness_std",
    "foresight_mean",
    "foresight_std",
    "n_responses",
];

fn parse_cell(path: &Path, line: u64, column: &str, cell: &str) -> Result<Option<f64>, ModelError> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>().map(Some).map_err(|_| ModelError::Schema {
        file: path.to_path_buf(),
        message: format!("line {line}: column '{column}' is not a number: '{cell}'"),
    })
}

/// Parses the survey CSV. Empty cells are kept as missing entries.
pub fn load_survey(path: &Path) -> Result<SurveyTable, ModelError> {
    let csv_err = |source| ModelError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let mut columns = [0usize; 10];
    for (slot, name) in columns.iter_mut().zip(SURVEY_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ModelError::Schema {
                file: path.to_path_buf(),
                message: format!("missing column '{name}'"),
            })?;
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |i: usize| record.get(columns[i]).unwrap_or("");
        let experiment_id = cell(0).to_string();
        if experiment_id.is_empty() {
            return Err(ModelError::Schema {
                file: path.to_path_buf(),
                message: format!("line {line}: empty experiment_id"),
            });
        }
        let n_responses = match parse_cell(path, line, SURVEY_HEADER[9], cell(9))? {
            Some(n) if n >= 0.0 && n.fract() == 0.0 => n as u32,
            Some(n) => {
                return Err(ModelError::Schema {
                    file: path.to_path_buf(),
                    message: format!("line {line}: n_responses must be a non-negative integer, got {n}"),
                })
            }
            None => 0,
        };
        let mut entries = [None; 4];
        for (m, entry) in entries.iter_mut().enumerate() {
            let mean_col = 1 + 2 * m;
            let mean = parse_cell(path, line, SURVEY_HEADER[mean_col], cell(mean_col))?;
            let std = parse_cell(path, line, SURVEY_HEADER[mean_col + 1], cell(mean_col + 1))?;
            *entry = match (mean, std) {
                (Some(mean), Some(std)) => Some(HmEntry {
                    mean,
                    std,
                    n_responses,
                }),
                (None, None) => None,
                _ => {
                    return Err(ModelError::Schema {
                        file: path.to_path_buf(),
                        message: format!(
                            "line {line}: {} needs both mean and std, or neither",
                            HmMetric::ALL[m].name()
                        ),
                    })
                }
            };
        }
        rows.push(SurveyRow {
            experiment_id,
            entries,
        });
    }
    SurveyTable::new(rows).map_err(|e| match e {
        ModelError::Validation { context, message } => ModelError::Validation {
            context: format!("{}: {}", path.display(), context),
            message,
        },
        other => other,
    })
}

/// Writes a survey table in the same CSV layout [`load_survey`] reads.
pub fn save_survey(table: &SurveyTable, path: &Path) -> Result<(), ModelError> {
    let csv_err = |source| ModelError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(SURVEY_HEADER).map_err(csv_err)?;
    for row in table.rows() {
        let mut fields = vec![row.experiment_id.clone()];
        let mut n = 0;
        for e in &row.entries {
            match e {
                Some(e) => {
                    fields.push(e.mean.to_string());
                    fields.push(e.std.to_string());
                    n = n.max(e.n_responses);
                }
                None => fields.extend([String::new(), String::new()]),
            }
        }
        fields.push(n.to_string());
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush().map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn survey(body: &str) -> Result<SurveyTable, ModelError> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("survey.csv");
        std::fs::write(&p, format!("{}\n{body}", SURVEY_HEADER.join(","))).unwrap();
        load_survey(&p)
    }

    #[test]
    fn parses_full_row() {
        let t = survey("exp01,3.4,0.9,4.1,0.7,3.0,1.1,3.8,0.8,70\n").unwrap();
        let row = t.get("exp01").unwrap();
        assert_eq!(
            row.entries[0],
            Some(HmEntry {
                mean: 3.4,
                std: 0.9,
                n_responses: 70
            })
        );
        assert_eq!(row.entries[3].unwrap().mean, 3.8);
        assert!(row.entries.iter().all(|e| e.unwrap().n_responses == 70));
    }

    #[test]
    fn empty_cells_are_missing() {
        let t = survey("curious1,,,4.1,0.7,3.0,1.1,3.8,0.8,70\n").unwrap();
        let row = t.get("curious1").unwrap();
        assert!(row.entries[HmMetric::Unobtrusiveness.index()].is_none());
        assert!(row.entries[HmMetric::Friendliness.index()].is_some());
    }

    #[test]
    fn out_of_range_mean_is_rejected() {
        let err = survey("exp01,5.7,0.9,4.1,0.7,3.0,1.1,3.8,0.8,70\n").unwrap_err();
        assert!(err.to_string().contains("Likert"), "{err}");
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let row = "exp01,3.4,0.9,4.1,0.7,3.0,1.1,3.8,0.8,70\n";
        assert!(survey(&format!("{row}{row}")).is_err());
    }

    #[test]
    fn save_then_load_preserves_missing_cells() {
        let t = survey("a,,,4.1,0.7,3.0,1.1,3.8,0.8,70\nb,2,0.5,2,0.5,2,0.5,2,0.5,12\n").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        save_survey(&t, &p).unwrap();
        assert_eq!(load_survey(&p).unwrap(), t);
    }
}
