//! Aggregate scores, trend comparison, CSV/SVG output and the end-to-end
//! pipeline.

mod aggregate;
mod config;
mod outputs;
mod pipeline;
mod svg;

pub use aggregate::{
    affine_fit, aggregate, aggregate_rows, trend_agreement, AffineFit, AggregateRow, MetricSetSpec, ScenarioTrend,
    TrendReport, TrendSummary, Variant, VariantTrend,
};
pub use config::{AggregateSection, ClusterSection, Config, DatasetSection};
pub use outputs::*;
pub use pipeline::{render_figures, run_pipeline, PipelineOptions, PipelineSummary};
pub use svg::{bar_chart_svg, cumulative_ari_svg, heatmap_svg, write_svg};

use std::path::{Path, PathBuf};

use crate::cluster::ClusterError;
use crate::metrics::MetricError;
use crate::model::ModelError;
use crate::preprocess::PreprocessError;
use crate::rank_stats::CorrelationEntry;
use crate::table::TableError;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("stage '{stage}' failed: {source}")]
    Stage { stage: &'static str, source: Box<ReportError> },
}

impl ReportError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ReportError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Fixed-point number format shared by every CSV and SVG output.
pub fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

/// Heatmap cell for a consistent correlation: the mean of `|rho|` and
/// `|tau|`, signed like rho.
pub fn heat_value(e: &CorrelationEntry) -> Option<f64> {
    if !e.consistent {
        return None;
    }
    let rho = e.spearman?.coef;
    Some(e.strength? * rho.signum())
}
