//! The eleven quantitative navigation metrics computed from one experiment.

mod proximity;
mod sfm;

pub use proximity::{avg_min_distance, closest_person_distances, proxemics_occupancy, ProxemicsOccupancy, ProxemicsThresholds};
pub use sfm::{social_force, social_work, SfmParams, SwAccumulation};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{wrap_angle, ExperimentRecord, ModelError, Trajectory};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("coincident positions at ({x}, {y}): force direction undefined")]
    CoincidentPositions { x: f64, y: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Quantitative metric identifiers, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QmMetric {
    #[serde(rename = "TTG")]
    Ttg,
    #[serde(rename = "PL")]
    Pl,
    #[serde(rename = "CHC")]
    Chc,
    #[serde(rename = "ARV")]
    Arv,
    #[serde(rename = "SW")]
    Sw,
    #[serde(rename = "SW_s")]
    SwS,
    #[serde(rename = "AMD")]
    Amd,
    #[serde(rename = "PR_I")]
    PrI,
    #[serde(rename = "PR_PE")]
    PrPe,
    #[serde(rename = "PR_S")]
    PrS,
    #[serde(rename = "PR_PU")]
    PrPu,
}

impl QmMetric {
    pub const ALL: [QmMetric; 11] = [
        QmMetric::Ttg,
        QmMetric::Pl,
        QmMetric::Chc,
        QmMetric::Arv,
        QmMetric::Sw,
        QmMetric::SwS,
        QmMetric::Amd,
        QmMetric::PrI,
        QmMetric::PrPe,
        QmMetric::PrS,
        QmMetric::PrPu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QmMetric::Ttg => "TTG",
            QmMetric::Pl => "PL",
            QmMetric::Chc => "CHC",
            QmMetric::Arv => "ARV",
            QmMetric::Sw => "SW",
            QmMetric::SwS => "SW_s",
            QmMetric::Amd => "AMD",
            QmMetric::PrI => "PR_I",
            QmMetric::PrPe => "PR_PE",
            QmMetric::PrS => "PR_S",
            QmMetric::PrPu => "PR_PU",
        }
    }
}

impl fmt::Display for QmMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QmMetric {
    type Err = String;

    /// Case-insensitive.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QmMetric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown metric '{s}'"))
    }
}

/// All eleven metrics for one run. `amd` is `None` when no person was ever
/// tracked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricVector {
    pub ttg: f64,
    pub pl: f64,
    pub chc: f64,
    pub arv: f64,
    pub sw: f64,
    pub sw_s: f64,
    pub amd: Option<f64>,
    pub pr_i: f64,
    pub pr_pe: f64,
    pub pr_s: f64,
    pub pr_pu: f64,
}

impl MetricVector {
    pub fn get(&self, m: QmMetric) -> Option<f64> {
        Some(match m {
            QmMetric::Ttg => self.ttg,
            QmMetric::Pl => self.pl,
            QmMetric::Chc => self.chc,
            QmMetric::Arv => self.arv,
            QmMetric::Sw => self.sw,
            QmMetric::SwS => self.sw_s,
            QmMetric::Amd => return self.amd,
            QmMetric::PrI => self.pr_i,
            QmMetric::PrPe => self.pr_pe,
            QmMetric::PrS => self.pr_s,
            QmMetric::PrPu => self.pr_pu,
        })
    }

    pub fn values(&self) -> [Option<f64>; 11] {
        QmMetric::ALL.map(|m| self.get(m))
    }
}

/// Settings for [`compute_all`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOptions {
    pub sfm: SfmParams,
    pub proxemics: ProxemicsThresholds,
    /// Analysis clock step (s).
    pub dt: f64,
    pub sw_accumulation: SwAccumulation,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            sfm: SfmParams::default(),
            proxemics: ProxemicsThresholds::default(),
            dt: 0.05,
            sw_accumulation: SwAccumulation::TimeIntegral,
        }
    }
}

pub fn time_to_goal(robot: &Trajectory) -> f64 {
    robot.duration()
}

pub fn path_length(robot: &Trajectory) -> f64 {
    robot
        .states()
        .windows(2)
        .map(|w| w[0].pose.distance_to(&w[1].pose))
        .sum()
}

/// Total absolute heading change between consecutive states.
pub fn cumulative_heading_changes(robot: &Trajectory) -> f64 {
    robot
        .states()
        .windows(2)
        .map(|w| wrap_angle(w[1].pose.theta - w[0].pose.theta).abs())
        .sum()
}

/// Time-weighted (trapezoidal) mean of `|v_lin|`.
pub fn avg_linear_velocity(robot: &Trajectory) -> f64 {
    let integral: f64 = robot
        .states()
        .windows(2)
        .map(|w| 0.5 * (w[0].v_lin.abs() + w[1].v_lin.abs()) * (w[1].t - w[0].t))
        .sum();
    integral / robot.duration()
}

/// Resamples the robot on the analysis clock and computes every metric.
pub fn compute_all(rec: &ExperimentRecord, opts: &MetricOptions) -> Result<MetricVector, MetricError> {
    let rec = rec.resampled(opts.dt)?;
    compute_on_clock(&rec, opts)
}

/// Computes every metric using the robot states of `rec` as the step grid.
pub fn compute_on_clock(rec: &ExperimentRecord, opts: &MetricOptions) -> Result<MetricVector, MetricError> {
    let (sw, sw_s) = social_work(rec, &opts.sfm, opts.sw_accumulation)?;
    let occ = proxemics_occupancy(rec, &opts.proxemics)?;
    Ok(MetricVector {
        ttg: time_to_goal(&rec.robot),
        pl: path_length(&rec.robot),
        chc: cumulative_heading_changes(&rec.robot),
        arv: avg_linear_velocity(&rec.robot),
        sw,
        sw_s,
        amd: avg_min_distance(rec),
        pr_i: occ.intimate,
        pr_pe: occ.personal,
        pr_s: occ.social,
        pr_pu: occ.public,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Pose2D, SubjectKind, TimedState};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn traj(points: &[(f64, f64, f64, f64, f64)]) -> Trajectory {
        let states = points
            .iter()
            .map(|&(t, x, y, th, v)| TimedState::new(t, Pose2D::new(x, y, th), v, 0.0))
            .collect();
        Trajectory::new("robot", SubjectKind::Robot, states).unwrap()
    }

    #[test]
    fn metric_names_round_trip() {
        for m in QmMetric::ALL {
            assert_eq!(m.name().parse::<QmMetric>().unwrap(), m);
        }
        assert_eq!("pr_pe".parse::<QmMetric>().unwrap(), QmMetric::PrPe);
        assert!("XYZ".parse::<QmMetric>().is_err());
    }

    #[test]
    fn ttg_is_span() {
        assert_eq!(time_to_goal(&traj(&[(0.0, 0.0, 0.0, 0.0, 0.0), (12.5, 1.0, 0.0, 0.0, 0.0)])), 12.5);
        assert_eq!(time_to_goal(&traj(&[(0.0, 0.0, 0.0, 0.0, 0.0), (0.05, 1.0, 0.0, 0.0, 0.0)])), 0.05);
    }

    #[test]
    fn path_length_of_unit_square() {
        let sq = traj(&[
            (0.0, 0.0, 0.0, 0.0, 1.0),
            (1.0, 1.0, 0.0, 0.0, 1.0),
            (2.0, 1.0, 1.0, 0.0, 1.0),
            (3.0, 0.0, 1.0, 0.0, 1.0),
            (4.0, 0.0, 0.0, 0.0, 1.0),
        ]);
        assert_abs_diff_eq!(path_length(&sq), 4.0);
        assert_abs_diff_eq!(path_length(&traj(&[(0.0, 0.0, 0.0, 0.0, 0.0), (1.0, 3.0, 0.0, 0.0, 0.0)])), 3.0);
    }

    #[test]
    fn heading_changes() {
        let constant = traj(&[(0.0, 0.0, 0.0, 0.7, 0.1), (1.0, 0.1, 0.0, 0.7, 0.1), (2.0, 0.2, 0.0, 0.7, 0.1)]);
        assert_eq!(cumulative_heading_changes(&constant), 0.0);

        let spin: Vec<_> = (0..=100).map(|i| (i as f64 * 0.1, 0.0, 0.0, PI * i as f64 / 100.0, 0.0)).collect();
        assert_abs_diff_eq!(cumulative_heading_changes(&traj(&spin)), PI, epsilon = 1e-6);

        // Square with four left turns, each done as an in-place rotation.
        let mut pts = Vec::new();
        let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)];
        let mut t = 0.0;
        for (i, &(x, y)) in corners.iter().enumerate() {
            let heading = FRAC_PI_2 * i as f64;
            pts.push((t, x, y, heading, 0.0));
            t += 1.0;
            if i < 4 {
                pts.push((t, x, y, heading + FRAC_PI_2 * 0.5, 0.0));
                t += 1.0;
            }
        }
        let oracle: f64 = [FRAC_PI_2; 4].iter().sum();
        assert_abs_diff_eq!(cumulative_heading_changes(&traj(&pts)), oracle, epsilon = 1e-6);
        assert_abs_diff_eq!(oracle, TAU, epsilon = 1e-12);
    }

    #[test]
    fn average_velocity_is_time_weighted() {
        let c = traj(&[(0.0, 0.0, 0.0, 0.0, 0.4), (5.0, 2.0, 0.0, 0.0, 0.4)]);
        assert_abs_diff_eq!(avg_linear_velocity(&c), 0.4, epsilon = 1e-12);
        let halves = traj(&[
            (0.0, 0.0, 0.0, 0.0, 0.2),
            (1.0, 0.2, 0.0, 0.0, 0.2),
            (2.0, 0.6, 0.0, 0.0, 0.6),
            (3.0, 1.2, 0.0, 0.0, 0.6),
        ]);
        assert_abs_diff_eq!(avg_linear_velocity(&halves), 0.4, epsilon = 1e-12);
    }
}
