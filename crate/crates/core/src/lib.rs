//! Quantitative social-navigation metrics and the statistical framework that
//! relates them to survey-based human assessment.
//!
//! The crate is organized by pipeline stage:
//!
//! * [`model`]: experiment records, survey tables, file formats, resampling.
//! * [`metrics`]: the eleven trajectory metrics (time to goal, path length,
//!   heading changes, speed, social work, distance to people, proxemics).
//! * [`preprocess`]: per-scenario normalization and survey scaling.
//! * [`cluster`]: k-means, silhouette, adjusted Rand index, subset search.
//! * [`rank_stats`]: Spearman and Kendall correlation with significance.
//! * [`report`]: aggregate scores, trend agreement, figures and the
//!   end-to-end pipeline.
//! * [`synth`]: deterministic synthetic scenarios with known ground truth.

pub mod cluster;
pub mod metrics;
pub mod model;
pub mod preprocess;
pub mod rank_stats;
pub mod report;
pub mod synth;
pub mod table;
