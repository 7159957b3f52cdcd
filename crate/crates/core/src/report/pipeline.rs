use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::*;
use crate::cluster::{best_k, cumulative_ari, kmeans, select_k, subset_search, SubsetResult};
use crate::metrics::compute_all;
use crate::model::{load_dataset, load_survey, HmMetric};
use crate::preprocess::{impute_columns_with_mean, impute_hm_for_clustering, normalize_qm, scale_hm};
use crate::rank_stats::consistent_correlations;
use crate::table::{MetricTable, NormalizedTable, RowKey};

/// Which optional stages run. Loading and metrics always do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineOptions {
    /// Skip everything that needs the survey.
    pub qm_only: bool,
    /// Without normalization no later stage runs either.
    pub normalize: bool,
    pub cluster: bool,
    pub correlate: bool,
    pub aggregate: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            qm_only: false,
            normalize: true,
            cluster: true,
            correlate: true,
            aggregate: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineSummary {
    pub output_dir: PathBuf,
    pub n_experiments: usize,
    /// `(k, silhouette)` of the survey-space clustering.
    pub silhouettes: Vec<(usize, f64)>,
    pub selected_k: Option<usize>,
    /// Ranked subsets, grouped by `k` in configuration order.
    pub subsets: Vec<SubsetResult>,
    /// Cumulative ARI summed over the subset-search `k` values.
    pub cumulative_ari: Vec<(String, f64)>,
    pub n_consistent: usize,
    pub trend: Option<TrendReport>,
    /// Files written, in order.
    pub files: Vec<String>,
}

fn stage<T>(name: &'static str, f: impl FnOnce() -> Result<T, ReportError>) -> Result<T, ReportError> {
    log::info!("stage {name}");
    f().map_err(|e| ReportError::Stage {
        stage: name,
        source: Box::new(e),
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }
}

/// Runs load → metrics → normalize → cluster/subset search → correlations
/// → aggregates and writes every table, figure and a manifest.
///
/// Files are written to a staging directory inside the output directory
/// and moved into place only when every stage succeeded. Given the same
/// configuration and inputs, every CSV is byte-identical between runs.
pub fn run_pipeline(cfg: &Config, opts: &PipelineOptions) -> Result<PipelineSummary, ReportError> {
    cfg.validate()?;
    let out_dir = cfg.dataset.output_dir.clone();
    let created = !out_dir.exists();
    fs::create_dir_all(&out_dir).map_err(|e| ReportError::io(&out_dir, e))?;
    let staging = out_dir.join(".partial");
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| ReportError::io(&staging, e))?;
    }
    fs::create_dir(&staging).map_err(|e| ReportError::io(&staging, e))?;

    let mut out = Outputs {
        dir: staging.clone(),
        files: Vec::new(),
    };
    match run_stages(cfg, opts, &mut out) {
        Ok(mut summary) => {
            for name in &out.files {
                let (from, to) = (staging.join(name), out_dir.join(name));
                fs::rename(&from, &to).map_err(|e| ReportError::io(&to, e))?;
            }
            fs::remove_dir_all(&staging).map_err(|e| ReportError::io(&staging, e))?;
            summary.output_dir = out_dir;
            summary.files = out.files;
            Ok(summary)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            if created {
                let _ = fs::remove_dir(&out_dir);
            }
            Err(e)
        }
    }
}

fn run_stages(cfg: &Config, opts: &PipelineOptions, out: &mut Outputs) -> Result<PipelineSummary, ReportError> {
    let mut summary = PipelineSummary::default();
    let survey_path = if opts.qm_only { None } else { cfg.dataset.survey.clone() };
    if !opts.qm_only && survey_path.is_none() {
        log::warn!("no survey configured; running quantitative stages only");
    }

    let records = stage("load", || {
        let records = load_dataset(&cfg.dataset.dir, cfg.dataset.strict)?;
        if records.is_empty() {
            return Err(ReportError::Config(format!("no experiments found in {}", cfg.dataset.dir.display())));
        }
        Ok(records)
    })?;
    summary.n_experiments = records.len();
    let keys: Vec<RowKey> = records.iter().map(RowKey::of).collect();

    let raw = stage("metrics", || {
        let mopts = cfg.metric_options();
        let rows = records
            .par_iter()
            .map(|r| compute_all(r, &mopts))
            .collect::<Result<Vec<_>, _>>()?;
        let table = MetricTable::new(keys.clone(), rows);
        write_metrics_raw(&out.path("metrics_raw.csv"), &table)?;
        Ok(table)
    })?;

    if !opts.normalize {
        stage("manifest", || write_manifest(cfg, opts, &records_inputs(cfg, &None)?, out))?;
        return Ok(summary);
    }

    let (qm, hm) = stage("normalize", || {
        let qm = normalize_qm(&raw, &cfg.directionality(), cfg.dataset.norm)?;
        write_normalized(&out.path("metrics_norm.csv"), &qm)?;
        let hm = match &survey_path {
            Some(path) => {
                let survey = load_survey(path)?;
                for row in survey.rows() {
                    if !keys.iter().any(|k| k.experiment_id == row.experiment_id) {
                        log::warn!("survey row '{}' matches no experiment; ignored", row.experiment_id);
                    }
                }
                let hm = scale_hm(&survey).aligned_to(&keys)?;
                write_normalized(&out.path("hm_norm.csv"), &hm)?;
                Some(hm)
            }
            None => None,
        };
        Ok((qm, hm))
    })?;

    if let (true, Some(hm)) = (opts.cluster, &hm) {
        stage("cluster", || cluster_stage(cfg, &qm, hm, out, &mut summary))?;
    }

    if let (true, Some(hm)) = (opts.correlate, &hm) {
        stage("correlate", || {
            let entries = consistent_correlations(&qm, hm, &cfg.stats)?;
            write_correlations(&out.path("correlations.csv"), &entries, &cfg.stats)?;
            let hm_cols: Vec<String> = HmMetric::ALL.iter().map(|m| m.name().to_string()).collect();
            let matrix = heat_matrix(&entries, &qm.columns, &hm_cols);
            write_heatmap(&out.path("heatmap.csv"), &qm.columns, &hm_cols, &matrix)?;
            write_svg(&out.path("heatmap.svg"), &heatmap_svg(&qm.columns, &hm_cols, &matrix))?;
            summary.n_consistent = entries.iter().filter(|e| e.consistent).count();
            Ok(())
        })?;
    }

    if opts.aggregate {
        stage("aggregate", || {
            let optimal = cfg.optimal_set()?;
            let rows = aggregate_rows(&qm, hm.as_ref(), &MetricSetSpec::full_qm(), &optimal)?;
            write_aggregates(&out.path("aggregates.csv"), &rows)?;
            write_svg(&out.path("aggregates.svg"), &bar_chart_svg(&rows))?;
            if hm.is_some() {
                let trend = trend_agreement(&rows);
                write_trend_report(&out.path("trend_report.csv"), &trend)?;
                let fits: Vec<AffineFit> = Variant::ALL.iter().filter_map(|&v| affine_fit(&rows, v)).collect();
                write_affine_fit(&out.path("affine_fit.csv"), &fits)?;
                summary.trend = Some(trend);
            }
            Ok(())
        })?;
    }

    stage("manifest", || write_manifest(cfg, opts, &records_inputs(cfg, &survey_path)?, out))?;
    Ok(summary)
}

fn cluster_stage(
    cfg: &Config,
    qm: &NormalizedTable,
    hm: &NormalizedTable,
    out: &mut Outputs,
    summary: &mut PipelineSummary,
) -> Result<(), ReportError> {
    let c = &cfg.cluster;
    let hm_points = impute_hm_for_clustering(hm)?.all_features()?;
    let selections = select_k(&hm_points, &cfg.k_range(), c.seed, c.restarts)?;
    let selected = best_k(&selections).map(|s| s.k);
    write_silhouettes(&out.path("silhouettes.csv"), &selections, selected.unwrap_or(0))?;
    write_hm_labels(&out.path("hm_labels.csv"), &hm.keys, &selections)?;
    summary.silhouettes = selections.iter().map(|s| (s.k, s.silhouette)).collect();
    summary.selected_k = selected;

    let qm_complete = impute_columns_with_mean(qm)?;
    let mut per_k = Vec::new();
    for &k in &c.subset_k {
        let reference = match selections.iter().find(|s| s.k == k) {
            Some(s) => s.partition.clone(),
            None => kmeans(&hm_points, k, c.seed, c.restarts)?,
        };
        let results = subset_search(&qm_complete, &reference, k, c.seed, c.restarts)?;
        let cum = cumulative_ari(&results);
        write_cumulative_ari(&out.path(&format!("cumulative_ari_k{k}.csv")), &cum)?;
        per_k.push((k, cum));
        summary.subsets.extend(results);
    }
    write_subset_results(&out.path("subset_results.csv"), &summary.subsets)?;
    let total = write_cumulative_ari_combined(&out.path("cumulative_ari.csv"), &per_k)?;
    write_svg(&out.path("cumulative_ari.svg"), &cumulative_ari_svg(&total))?;
    summary.cumulative_ari = total;
    Ok(())
}

/// Input files with their digests, in sorted order.
fn records_inputs(cfg: &Config, survey: &Option<PathBuf>) -> Result<Vec<(String, String)>, ReportError> {
    let dir = &cfg.dataset.dir;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| ReportError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files.extend(survey.iter().cloned());
    files
        .iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| ReportError::io(p, e))?;
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, sha256_hex(&bytes)))
        })
        .collect()
}

fn write_manifest(
    cfg: &Config,
    opts: &PipelineOptions,
    inputs: &[(String, String)],
    out: &mut Outputs,
) -> Result<(), ReportError> {
    let config_json = serde_json::to_vec(cfg)?;
    let outputs = out
        .files
        .iter()
        .map(|name| {
            let path = out.dir.join(name);
            let bytes = fs::read(&path).map_err(|e| ReportError::io(&path, e))?;
            Ok(json!({ "file": name, "sha256": sha256_hex(&bytes) }))
        })
        .collect::<Result<Vec<_>, ReportError>>()?;
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.cluster.seed,
        "config_sha256": sha256_hex(&config_json),
        "config": cfg,
        "qm_only": opts.qm_only || cfg.dataset.survey.is_none(),
        "inputs": inputs.iter().map(|(f, h)| json!({ "file": f, "sha256": h })).collect::<Vec<_>>(),
        "outputs": outputs,
    });
    let path = out.path("run_manifest.json");
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(&path, text).map_err(|e| ReportError::io(&path, e))
}

/// Re-renders the figures from the CSV tables in `dir`. Tables that are
/// absent are skipped; returns the figures written.
pub fn render_figures(dir: &Path) -> Result<Vec<String>, ReportError> {
    let mut written = Vec::new();
    let agg = dir.join("aggregates.csv");
    if agg.exists() {
        write_svg(&dir.join("aggregates.svg"), &bar_chart_svg(&read_aggregates(&agg)?))?;
        written.push("aggregates.svg".to_string());
    }
    let heat = dir.join("heatmap.csv");
    if heat.exists() {
        let (qm, hm, values) = read_heatmap(&heat)?;
        write_svg(&dir.join("heatmap.svg"), &heatmap_svg(&qm, &hm, &values))?;
        written.push("heatmap.svg".to_string());
    }
    let cum = dir.join("cumulative_ari.csv");
    if cum.exists() {
        write_svg(&dir.join("cumulative_ari.svg"), &cumulative_ari_svg(&read_cumulative_ari(&cum)?))?;
        written.push("cumulative_ari.svg".to_string());
    }
    Ok(written)
}
