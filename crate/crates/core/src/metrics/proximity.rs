use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::model::ExperimentRecord;

/// Upper distance bounds of the intimate, personal and social zones (m).
/// Anything farther is public space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProxemicsThresholds {
    pub intimate_max: f64,
    pub personal_max: f64,
    pub social_max: f64,
}

impl Default for ProxemicsThresholds {
    fn default() -> Self {
        ProxemicsThresholds {
            intimate_max: 0.45,
            personal_max: 1.2,
            social_max: 3.6,
        }
    }
}

impl ProxemicsThresholds {
    pub fn validate(&self) -> Result<(), MetricError> {
        if 0.0 < self.intimate_max && self.intimate_max < self.personal_max && self.personal_max < self.social_max {
            Ok(())
        } else {
            Err(MetricError::InvalidParameter(format!(
                "proxemics thresholds must satisfy 0 < intimate < personal < social, got {self:?}"
            )))
        }
    }
}

/// Share of steps (percent) spent in each proxemic zone.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProxemicsOccupancy {
    pub intimate: f64,
    pub personal: f64,
    pub social: f64,
    pub public: f64,
}

/// Distance from the robot to the closest visible person at each robot
/// step, `None` where nobody is tracked.
pub fn closest_person_distances(rec: &ExperimentRecord) -> Vec<Option<f64>> {
    rec.robot
        .states()
        .iter()
        .map(|s| {
            rec.agents
                .iter()
                .filter_map(|a| a.state_at(s.t))
                .map(|a| a.pose.distance_to(&s.pose))
                .min_by(f64::total_cmp)
        })
        .collect()
}

/// Mean over steps of the distance to the closest person. Steps with nobody
/// in view are skipped; `None` when no person is ever in view.
pub fn avg_min_distance(rec: &ExperimentRecord) -> Option<f64> {
    let (sum, count) = closest_person_distances(rec)
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, c), d| (s + d, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Classifies every robot step by its distance to the closest person.
/// Steps with nobody in view count as public space.
pub fn proxemics_occupancy(
    rec: &ExperimentRecord,
    thr: &ProxemicsThresholds,
) -> Result<ProxemicsOccupancy, MetricError> {
    thr.validate()?;
    let distances = closest_person_distances(rec);
    let mut counts = [0usize; 4];
    for d in &distances {
        let zone = match d {
            Some(d) if *d <= thr.intimate_max => 0,
            Some(d) if *d <= thr.personal_max => 1,
            Some(d) if *d <= thr.social_max => 2,
            _ => 3,
        };
        counts[zone] += 1;
    }
    let total = distances.len() as f64;
    let pct = |c: usize| 100.0 * c as f64 / total;
    Ok(ProxemicsOccupancy {
        intimate: pct(counts[0]),
        personal: pct(counts[1]),
        social: pct(counts[2]),
        public: pct(counts[3]),
    })
}
