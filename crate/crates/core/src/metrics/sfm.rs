//! Social force model terms and the social work metric.

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::model::{ExperimentRecord, Pose2D, TimedState};

/// Parameters of the exponential social force model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SfmParams {
    /// Social repulsion strength (m/s²).
    pub force_strength_social: f64,
    /// Social repulsion range (m).
    pub force_range_social: f64,
    /// Body radius shared by robot and people (m).
    pub agent_radius: f64,
    /// Field-of-view anisotropy in `[0, 1]`; 1 disables it.
    pub anisotropy: f64,
    /// Obstacle repulsion strength (m/s²).
    pub force_strength_obstacle: f64,
    /// Obstacle repulsion range (m).
    pub force_range_obstacle: f64,
    /// Sources farther than this exert no force (m).
    pub interaction_cutoff: f64,
}

impl Default for SfmParams {
    fn default() -> Self {
        SfmParams {
            force_strength_social: 2.1,
            force_range_social: 0.3,
            agent_radius: 0.35,
            anisotropy: 0.59,
            force_strength_obstacle: 10.0,
            force_range_obstacle: 0.2,
            interaction_cutoff: 5.0,
        }
    }
}

impl SfmParams {
    pub fn validate(&self) -> Result<(), MetricError> {
        let positive = [
            ("force_strength_social", self.force_strength_social),
            ("force_range_social", self.force_range_social),
            ("agent_radius", self.agent_radius),
            ("force_strength_obstacle", self.force_strength_obstacle),
            ("force_range_obstacle", self.force_range_obstacle),
            ("interaction_cutoff", self.interaction_cutoff),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MetricError::InvalidParameter(format!("sfm.{name} must be > 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.anisotropy) {
            return Err(MetricError::InvalidParameter(format!(
                "sfm.anisotropy must lie in [0, 1], got {}",
                self.anisotropy
            )));
        }
        Ok(())
    }

    /// Magnitude of the isotropic social repulsion at center distance `d`.
    pub fn social_magnitude(&self, d: f64) -> f64 {
        self.force_strength_social * ((2.0 * self.agent_radius - d) / self.force_range_social).exp()
    }

    /// Magnitude of the obstacle repulsion at distance `d` from a wall.
    pub fn obstacle_magnitude(&self, d: f64) -> f64 {
        self.force_strength_obstacle * ((self.agent_radius - d) / self.force_range_obstacle).exp()
    }
}

/// How per-step work is accumulated into SW.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwAccumulation {
    /// Trapezoidal time integral; independent of the sampling rate.
    #[default]
    TimeIntegral,
    /// Plain sum of per-step values.
    RawSum,
}

/// Repulsive force exerted by `source` on `target` (m/s²).
///
/// Exponential in the gap between the two bodies, pointing from source to
/// target, weighted by `λ + (1 − λ)(1 + cos φ)/2` where `φ` is the angle
/// between the target's direction of motion and the direction towards the
/// source. When the target is not moving its heading is used instead.
pub fn social_force(
    target: &Pose2D,
    target_vel: [f64; 2],
    source: &Pose2D,
    params: &SfmParams,
) -> Result<[f64; 2], MetricError> {
    let (dx, dy) = (target.x - source.x, target.y - source.y);
    let d = dx.hypot(dy);
    if d == 0.0 {
        return Err(MetricError::CoincidentPositions {
            x: target.x,
            y: target.y,
        });
    }
    if d > params.interaction_cutoff {
        return Ok([0.0, 0.0]);
    }
    let n = [dx / d, dy / d];
    let speed = target_vel[0].hypot(target_vel[1]);
    let e = if speed > 0.0 {
        [target_vel[0] / speed, target_vel[1] / speed]
    } else {
        [target.theta.cos(), target.theta.sin()]
    };
    // cos φ between the motion direction and the direction to the source (−n).
    let cos_phi = -(e[0] * n[0] + e[1] * n[1]);
    let lambda = params.anisotropy;
    let weight = lambda + (1.0 - lambda) * (1.0 + cos_phi) / 2.0;
    let magnitude = params.social_magnitude(d) * weight;
    Ok([magnitude * n[0], magnitude * n[1]])
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Per-step social work: `|F_P| + |F_O| + Σ_i |F_robot→i|`.
pub(crate) fn step_work(
    robot: &TimedState,
    agents: &[TimedState],
    rec: &ExperimentRecord,
    params: &SfmParams,
) -> Result<f64, MetricError> {
    let robot_vel = robot.velocity();
    let mut on_robot = [0.0, 0.0];
    let mut from_robot = 0.0;
    for agent in agents {
        let f = social_force(&robot.pose, robot_vel, &agent.pose, params)?;
        on_robot[0] += f[0];
        on_robot[1] += f[1];
        from_robot += norm(social_force(&agent.pose, agent.velocity(), &robot.pose, params)?);
    }
    let obstacle = rec
        .map
        .as_ref()
        .and_then(|m| m.nearest_segment_distance(robot.pose.x, robot.pose.y))
        .filter(|(d, _)| *d <= params.interaction_cutoff)
        .map_or(0.0, |(d, _)| params.obstacle_magnitude(d));
    Ok(norm(on_robot) + obstacle + from_robot)
}

/// Social work accumulated over the run and its per-second average.
///
/// Steps are the robot states of `rec` (resample first for a uniform
/// clock). Agents are interpolated at each robot timestamp and ignored
/// outside their recorded span. Without a map the obstacle term is zero.
pub fn social_work(
    rec: &ExperimentRecord,
    params: &SfmParams,
    accumulation: SwAccumulation,
) -> Result<(f64, f64), MetricError> {
    params.validate()?;
    let states = rec.robot.states();
    let mut work = Vec::with_capacity(states.len());
    let mut present = Vec::with_capacity(rec.agents.len());
    for s in states {
        present.clear();
        present.extend(rec.agents.iter().filter_map(|a| a.state_at(s.t)));
        work.push(step_work(s, &present, rec, params)?);
    }
    let sw = match accumulation {
        SwAccumulation::TimeIntegral => states
            .windows(2)
            .zip(work.windows(2))
            .map(|(s, w)| 0.5 * (w[0] + w[1]) * (s[1].t - s[0].t))
            .sum(),
        SwAccumulation::RawSum => work.iter().sum(),
    };
    let ttg = rec.robot.duration();
    Ok((sw, sw / ttg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params(lambda: f64) -> SfmParams {
        SfmParams {
            anisotropy: lambda,
            ..SfmParams::default()
        }
    }

    #[test]
    fn beyond_cutoff_is_zero() {
        let f = social_force(
            &Pose2D::new(6.0, 0.0, 0.0),
            [0.5, 0.0],
            &Pose2D::new(0.0, 0.0, 0.0),
            &params(0.59),
        )
        .unwrap();
        assert_eq!(f, [0.0, 0.0]);
    }

    #[test]
    fn touching_bodies_give_full_strength() {
        let p = params(1.0);
        let d = 2.0 * p.agent_radius;
        let f = social_force(&Pose2D::new(d, 0.0, 0.0), [0.0, 0.0], &Pose2D::new(0.0, 0.0, 0.0), &p).unwrap();
        assert_abs_diff_eq!(norm(f), p.force_strength_social, epsilon = 1e-12);
        // points away from the source
        assert!(f[0] > 0.0);
    }

    #[test]
    fn isotropic_force_ignores_velocity_direction() {
        let p = params(1.0);
        let src = Pose2D::new(0.0, 0.0, 0.0);
        let tgt = Pose2D::new(1.0, 0.5, 0.0);
        let a = norm(social_force(&tgt, [1.0, 0.0], &src, &p).unwrap());
        let b = norm(social_force(&tgt, [-1.0, 0.3], &src, &p).unwrap());
        assert_relative_eq!(a, b, epsilon = 1e-15);
    }

    #[test]
    fn anisotropy_weights_sources_ahead_more() {
        let p = params(0.3);
        let src = Pose2D::new(0.0, 0.0, 0.0);
        let tgt = Pose2D::new(1.0, 0.0, 0.0);
        // moving towards the source: φ = 0, weight 1
        let ahead = norm(social_force(&tgt, [-1.0, 0.0], &src, &p).unwrap());
        // moving away: φ = π, weight λ
        let behind = norm(social_force(&tgt, [1.0, 0.0], &src, &p).unwrap());
        assert_relative_eq!(ahead, p.social_magnitude(1.0), epsilon = 1e-12);
        assert_relative_eq!(behind, 0.3 * p.social_magnitude(1.0), epsilon = 1e-12);
    }

    #[test]
    fn coincident_positions_error() {
        let p = params(1.0);
        let a = Pose2D::new(1.0, 1.0, 0.0);
        assert!(matches!(
            social_force(&a, [0.0, 0.0], &a, &p),
            Err(MetricError::CoincidentPositions { .. })
        ));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(SfmParams { anisotropy: 1.5, ..Default::default() }.validate().is_err());
        assert!(SfmParams { force_range_social: 0.0, ..Default::default() }.validate().is_err());
        assert!(SfmParams::default().validate().is_ok());
    }
}
