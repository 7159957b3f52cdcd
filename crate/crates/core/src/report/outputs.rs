use std::fs::File;
use std::path::Path;

use super::{fmt_num, fmt_opt, heat_value, AffineFit, AggregateRow, ReportError, TrendReport};
use crate::cluster::{KSelection, SubsetResult};
use crate::metrics::QmMetric;
use crate::rank_stats::{CorrelationEntry, Thresholds};
use crate::table::{MetricTable, NormalizedTable, RowKey};

fn writer(path: &Path) -> Result<csv::Writer<File>, ReportError> {
    let file = File::create(path).map_err(|e| ReportError::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<(), ReportError> {
    w.flush().map_err(|e| ReportError::io(path, e))
}

fn key_fields(k: &RowKey) -> [String; 3] {
    [k.experiment_id.clone(), k.scenario_id.clone(), k.run_index.to_string()]
}

pub fn write_metrics_raw(path: &Path, table: &MetricTable) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    let mut header = vec!["experiment_id".to_string(), "scenario_id".into(), "run_index".into()];
    header.extend(QmMetric::ALL.iter().map(|m| m.name().to_string()));
    w.write_record(&header)?;
    for (k, row) in table.keys.iter().zip(&table.rows) {
        let mut rec = key_fields(k).to_vec();
        rec.extend(row.values().iter().map(|v| fmt_opt(*v)));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// Writes a score table; imputed cells are written as missing.
pub fn write_normalized(path: &Path, table: &NormalizedTable) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    let mut header = vec!["experiment_id".to_string(), "scenario_id".into(), "run_index".into()];
    header.extend(table.columns.iter().cloned());
    w.write_record(&header)?;
    for (i, k) in table.keys.iter().enumerate() {
        let mut rec = key_fields(k).to_vec();
        rec.extend(
            table.cells[i]
                .iter()
                .zip(&table.imputed[i])
                .map(|(v, &imp)| if imp { String::new() } else { fmt_opt(*v) }),
        );
        w.write_record(&rec)?;
    }
    finish(w, path)
}

pub fn write_silhouettes(path: &Path, selections: &[KSelection], selected_k: usize) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    w.write_record(["k", "silhouette", "inertia", "selected"])?;
    for s in selections {
        w.write_record([
            s.k.to_string(),
            fmt_num(s.silhouette),
            fmt_num(s.partition.inertia()),
            (s.k == selected_k).to_string(),
        ])?;
    }
    finish(w, path)
}

/// Survey-space cluster label of every experiment for each tried `k`.
pub fn write_hm_labels(path: &Path, keys: &[RowKey], selections: &[KSelection]) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    let mut header = vec!["experiment_id".to_string(), "scenario_id".into(), "run_index".into()];
    header.extend(selections.iter().map(|s| format!("k{}", s.k)));
    w.write_record(&header)?;
    for (i, k) in keys.iter().enumerate() {
        let mut rec = key_fields(k).to_vec();
        rec.extend(selections.iter().map(|s| s.partition.labels()[i].to_string()));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// Ranked subsets; member names joined with `+`.
pub fn write_subset_results(path: &Path, results: &[SubsetResult]) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    w.write_record(["k", "rank", "size", "subset", "ari"])?;
    let mut rank = 0;
    let mut last_k = None;
    for r in results {
        if last_k != Some(r.k) {
            rank = 0;
            last_k = Some(r.k);
        }
        rank += 1;
        w.write_record([
            r.k.to_string(),
            rank.to_string(),
            r.metrics.len().to_string(),
            r.metrics.join("+"),
            fmt_num(r.ari),
        ])?;
    }
    finish(w, path)
}

pub fn write_cumulative_ari(path: &Path, scores: &[(String, f64)]) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    w.write_record(["metric", "cumulative_ari"])?;
    for (m, s) in scores {
        w.write_record([m.clone(), fmt_num(*s)])?;
    }
    finish(w, path)
}

/// Per-`k` cumulative scores side by side plus their sum, sorted by the
/// sum. Returns the summed scores in file order.
pub fn write_cumulative_ari_combined(
    path: &Path,
    per_k: &[(usize, Vec<(String, f64)>)],
) -> Result<Vec<(String, f64)>, ReportError> {
    let mut names: Vec<String> = Vec::new();
    for (_, scores) in per_k {
        for (m, _) in scores {
            if !names.contains(m) {
                names.push(m.clone());
            }
        }
    }
    let lookup = |scores: &[(String, f64)], m: &str| scores.iter().find(|(n, _)| n == m).map_or(0.0, |s| s.1);
    let mut rows: Vec<(String, Vec<f64>, f64)> = names
        .into_iter()
        .map(|m| {
            let vals: Vec<f64> = per_k.iter().map(|(_, s)| lookup(s, &m)).collect();
            let total = vals.iter().sum();
            (m, vals, total)
        })
        .collect();
    rows.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));

    let mut w = writer(path)?;
    let mut header = vec!["metric".to_string()];
    header.extend(per_k.iter().map(|(k, _)| format!("k{k}")));
    header.push("total".into());
    w.write_record(&header)?;
    for (m, vals, total) in &rows {
        let mut rec = vec![m.clone()];
        rec.extend(vals.iter().map(|v| fmt_num(*v)));
        rec.push(fmt_num(*total));
        w.write_record(&rec)?;
    }
    finish(w, path)?;
    Ok(rows.into_iter().map(|(m, _, t)| (m, t)).collect())
}

pub fn write_correlations(path: &Path, entries: &[CorrelationEntry], thr: &Thresholds) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    w.write_record([
        "qm", "hm", "n", "status", "rho", "p_rho", "tau", "p_tau", "consistent", "strength", "p_max_rho", "p_max_tau",
    ])?;
    for e in entries {
        w.write_record([
            e.qm_name.clone(),
            e.hm_name.clone(),
            e.n.to_string(),
            e.status.as_str().to_string(),
            fmt_opt(e.spearman.map(|c| c.coef)),
            fmt_opt(e.spearman.map(|c| c.p)),
            fmt_opt(e.kendall.map(|c| c.coef)),
            fmt_opt(e.kendall.map(|c| c.p)),
            e.consistent.to_string(),
            fmt_opt(e.strength),
            fmt_num(thr.p_max_rho),
            fmt_num(thr.p_max_tau),
        ])?;
    }
    finish(w, path)
}

/// QM × HM matrix of signed strengths; empty where the pair is not a
/// consistent correlation.
pub fn write_heatmap(
    path: &Path,
    qm_columns: &[String],
    hm_columns: &[String],
    values: &[Vec<Option<f64>>],
) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    let mut header = vec!["qm".to_string()];
    header.extend(hm_columns.iter().cloned());
    w.write_record(&header)?;
    for (q, row) in qm_columns.iter().zip(values) {
        let mut rec = vec![q.clone()];
        rec.extend(row.iter().map(|v| fmt_opt(*v)));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// Heatmap matrix from correlation entries: [`heat_value`] of each pair.
pub fn heat_matrix(entries: &[CorrelationEntry], qm_columns: &[String], hm_columns: &[String]) -> Vec<Vec<Option<f64>>> {
    qm_columns
        .iter()
        .map(|q| {
            hm_columns
                .iter()
                .map(|h| {
                    entries
                        .iter()
                        .find(|e| &e.qm_name == q && &e.hm_name == h)
                        .and_then(heat_value)
                })
                .collect()
        })
        .collect()
}

pub fn write_aggregates(path: &Path, rows: &[AggregateRow]) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    w.write_record(["experiment_id", "scenario_id", "run_index", "hm_mean", "hm_std", "qm_full", "qm_optimal"])?;
    for r in rows {
        w.write_record([
            r.experiment_id.clone(),
            r.scenario_id.clone(),
            r.run_index.to_string(),
            fmt_opt(r.hm_mean),
            fmt_opt(r.hm_std),
            fmt_opt(r.qm_full),
            fmt_opt(r.qm_optimal),
        ])?;
    }
    finish(w, path)
}

/// One line per scenario and variant, then one summary line per variant
/// with scenario `ALL` (tau is the mean, flags are fractions).
pub fn write_trend_report(path: &Path, report: &TrendReport) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    w.write_record(["scenario_id", "variant", "n", "tau", "best_match", "worst_match"])?;
    for s in &report.scenarios {
        for v in &s.variants {
            w.write_record([
                s.scenario_id.clone(),
                v.variant.name().to_string(),
                s.n_runs.to_string(),
                fmt_opt(v.tau),
                (v.best_match as u8).to_string(),
                (v.worst_match as u8).to_string(),
            ])?;
        }
    }
    for s in &report.summary {
        w.write_record([
            "ALL".to_string(),
            s.variant.name().to_string(),
            s.n_scenarios.to_string(),
            fmt_opt(s.mean_tau),
            fmt_num(s.best_match_fraction),
            fmt_num(s.worst_match_fraction),
        ])?;
    }
    finish(w, path)
}

pub fn write_affine_fit(path: &Path, fits: &[AffineFit]) -> Result<(), ReportError> {
    let mut w = writer(path)?;
    w.write_record(["variant", "n", "slope", "intercept", "r_squared"])?;
    for f in fits {
        w.write_record([
            f.variant.name().to_string(),
            f.n.to_string(),
            fmt_num(f.slope),
            fmt_num(f.intercept),
            fmt_num(f.r_squared),
        ])?;
    }
    finish(w, path)
}

fn reader(path: &Path) -> Result<csv::Reader<File>, ReportError> {
    let file = File::open(path).map_err(|e| ReportError::io(path, e))?;
    Ok(csv::Reader::from_reader(file))
}

fn parse_opt(path: &Path, field: &str) -> Result<Option<f64>, ReportError> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| ReportError::Config(format!("{}: '{field}' is not a number", path.display())))
}

/// Reads back a file written by [`write_aggregates`].
pub fn read_aggregates(path: &Path) -> Result<Vec<AggregateRow>, ReportError> {
    let mut rows = Vec::new();
    for rec in reader(path)?.records() {
        let rec = rec?;
        if rec.len() != 7 {
            return Err(ReportError::Config(format!("{}: expected 7 columns, got {}", path.display(), rec.len())));
        }
        rows.push(AggregateRow {
            experiment_id: rec[0].to_string(),
            scenario_id: rec[1].to_string(),
            run_index: rec[2]
                .parse()
                .map_err(|_| ReportError::Config(format!("{}: bad run index '{}'", path.display(), &rec[2])))?,
            hm_mean: parse_opt(path, &rec[3])?,
            hm_std: parse_opt(path, &rec[4])?,
            qm_full: parse_opt(path, &rec[5])?,
            qm_optimal: parse_opt(path, &rec[6])?,
        });
    }
    Ok(rows)
}

/// QM names, HM names and the value matrix of a heatmap table.
pub type Heatmap = (Vec<String>, Vec<String>, Vec<Vec<Option<f64>>>);

/// Reads back a file written by [`write_heatmap`]: QM names, HM names and
/// the value matrix.
pub fn read_heatmap(path: &Path) -> Result<Heatmap, ReportError> {
    let mut r = reader(path)?;
    let hm: Vec<String> = r.headers()?.iter().skip(1).map(String::from).collect();
    let mut qm = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        qm.push(rec[0].to_string());
        values.push(rec.iter().skip(1).map(|f| parse_opt(path, f)).collect::<Result<Vec<_>, _>>()?);
    }
    Ok((qm, hm, values))
}

/// Metric names and the last numeric column of a cumulative ARI file.
pub fn read_cumulative_ari(path: &Path) -> Result<Vec<(String, f64)>, ReportError> {
    let mut out = Vec::new();
    for rec in reader(path)?.records() {
        let rec = rec?;
        let last = rec.get(rec.len() - 1).unwrap_or_default();
        let v = parse_opt(path, last)?
            .ok_or_else(|| ReportError::Config(format!("{}: missing score for '{}'", path.display(), &rec[0])))?;
        out.push((rec[0].to_string(), v));
    }
    Ok(out)
}
