//! Domain types shared by every analysis stage: poses, timed states,
//! trajectories, obstacle maps and experiment records.
//!
//! Everything here is immutable once constructed. Constructors validate the
//! invariants (finite coordinates, strictly increasing timestamps, headings
//! wrapped to `(-π, π]`), so downstream code can rely on them.

mod adapter;
mod io;
mod resample;
mod survey;

pub use adapter::{convert_wide_csv, convert_wide_csv_dir, WideCsvOptions};
pub use io::{load_dataset, load_experiment, save_dataset, save_experiment};
pub use resample::resample;
pub use survey::{load_survey, save_survey, HmEntry, HmMetric, SurveyRow, SurveyTable};

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// Robot linear velocity limit used for strict validation (m/s).
pub const ROBOT_MAX_LINEAR_VELOCITY: f64 = 0.6;
/// Robot angular velocity limit used for strict validation (rad/s).
pub const ROBOT_MAX_ANGULAR_VELOCITY: f64 = 1.5;

const VELOCITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("{file}: schema error: {message}")]
    Schema { file: PathBuf, message: String },
    #[error("{context}: {message}")]
    Validation { context: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("resample step {dt} s must be positive and shorter than the trajectory duration {duration} s")]
    InvalidStep { dt: f64, duration: f64 },
}

impl ModelError {
    pub(crate) fn validation(context: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Validation {
            context: context.into(),
            message: message.into(),
        }
    }
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2D {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn distance_to(&self, other: &Pose2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedState {
    pub t: f64,
    #[serde(flatten)]
    pub pose: Pose2D,
    pub v_lin: f64,
    pub v_ang: f64,
}

impl TimedState {
    pub fn new(t: f64, pose: Pose2D, v_lin: f64, v_ang: f64) -> Self {
        TimedState {
            t,
            pose,
            v_lin,
            v_ang,
        }
    }

    /// Planar velocity vector implied by heading and linear speed.
    pub fn velocity(&self) -> [f64; 2] {
        [
            self.v_lin * self.pose.theta.cos(),
            self.v_lin * self.pose.theta.sin(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubjectKind {
    Robot,
    Human,
}

/// An ordered, validated sequence of timed states for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    subject_id: String,
    kind: SubjectKind,
    states: Vec<TimedState>,
}

impl Trajectory {
    /// Validates and builds a trajectory. Headings are wrapped to `(-π, π]`.
    pub fn new(
        subject_id: impl Into<String>,
        kind: SubjectKind,
        mut states: Vec<TimedState>,
    ) -> Result<Self, ModelError> {
        let subject_id = subject_id.into();
        if states.len() < 2 {
            return Err(ModelError::validation(
                format!("trajectory '{subject_id}'"),
                format!("needs at least 2 states, got {}", states.len()),
            ));
        }
        for (i, s) in states.iter_mut().enumerate() {
            if !(s.t.is_finite() && s.pose.is_finite() && s.v_lin.is_finite() && s.v_ang.is_finite())
            {
                return Err(ModelError::validation(
                    format!("trajectory '{subject_id}'"),
                    format!("state {i} has a non-finite field"),
                ));
            }
            s.pose.theta = wrap_angle(s.pose.theta);
        }
        for (i, w) in states.windows(2).enumerate() {
            if w[1].t <= w[0].t {
                return Err(ModelError::validation(
                    format!("trajectory '{subject_id}'"),
                    format!(
                        "timestamps must be strictly increasing: t[{}]={} then t[{}]={}",
                        i,
                        w[0].t,
                        i + 1,
                        w[1].t
                    ),
                ));
            }
        }
        Ok(Trajectory {
            subject_id,
            kind,
            states,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn kind(&self) -> SubjectKind {
        self.kind
    }

    pub fn states(&self) -> &[TimedState] {
        &self.states
    }

    pub fn t_first(&self) -> f64 {
        self.states[0].t
    }

    pub fn t_last(&self) -> f64 {
        self.states[self.states.len() - 1].t
    }

    pub fn duration(&self) -> f64 {
        self.t_last() - self.t_first()
    }

    /// Returns `true` when `t` falls inside the recorded time span.
    pub fn covers(&self, t: f64) -> bool {
        const EPS: f64 = 1e-9;
        t >= self.t_first() - EPS && t <= self.t_last() + EPS
    }

    /// Linearly interpolated state at time `t`; `None` outside the recorded
    /// span (no extrapolation). Heading follows the shortest arc.
    pub fn state_at(&self, t: f64) -> Option<TimedState> {
        if !self.covers(t) {
            return None;
        }
        let idx = self.states.partition_point(|s| s.t < t);
        if idx == 0 {
            return Some(TimedState { t, ..self.states[0] });
        }
        if idx >= self.states.len() {
            return Some(TimedState {
                t,
                ..self.states[self.states.len() - 1]
            });
        }
        let a = &self.states[idx - 1];
        let b = &self.states[idx];
        Some(interpolate(a, b, t))
    }

    /// Applies a rigid planar transform (rotation about the origin, then
    /// translation) to every pose.
    pub fn transformed(&self, tf: &RigidTransform) -> Trajectory {
        Trajectory {
            subject_id: self.subject_id.clone(),
            kind: self.kind,
            states: self
                .states
                .iter()
                .map(|s| TimedState {
                    pose: tf.apply_pose(&s.pose),
                    ..*s
                })
                .collect(),
        }
    }

    /// The same states in reverse order, re-timed so the run still starts at
    /// `t_first`. Used for time-reversal checks.
    pub fn reversed(&self) -> Trajectory {
        let t0 = self.t_first();
        let t1 = self.t_last();
        let states = self
            .states
            .iter()
            .rev()
            .map(|s| TimedState {
                t: t0 + (t1 - s.t),
                ..*s
            })
            .collect();
        Trajectory {
            subject_id: self.subject_id.clone(),
            kind: self.kind,
            states,
        }
    }

    /// Checks the robot velocity limits, returning a description of the
    /// first violation.
    pub fn velocity_violation(&self) -> Option<String> {
        self.states.iter().find_map(|s| {
            if s.v_lin < -VELOCITY_TOLERANCE
                || s.v_lin > ROBOT_MAX_LINEAR_VELOCITY + VELOCITY_TOLERANCE
            {
                Some(format!("v_lin={} at t={} outside [0, {}]", s.v_lin, s.t, ROBOT_MAX_LINEAR_VELOCITY))
            } else if s.v_ang.abs() > ROBOT_MAX_ANGULAR_VELOCITY + VELOCITY_TOLERANCE {
                Some(format!("|v_ang|={} at t={} exceeds {}", s.v_ang.abs(), s.t, ROBOT_MAX_ANGULAR_VELOCITY))
            } else {
                None
            }
        })
    }
}

pub(crate) fn interpolate(a: &TimedState, b: &TimedState, t: f64) -> TimedState {
    let span = b.t - a.t;
    let u = ((t - a.t) / span).clamp(0.0, 1.0);
    let lerp = |p: f64, q: f64| p + (q - p) * u;
    let dtheta = wrap_angle(b.pose.theta - a.pose.theta);
    TimedState {
        t,
        pose: Pose2D::new(
            lerp(a.pose.x, b.pose.x),
            lerp(a.pose.y, b.pose.y),
            a.pose.theta + dtheta * u,
        ),
        v_lin: lerp(a.v_lin, b.v_lin),
        v_ang: lerp(a.v_ang, b.v_ang),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        const EPS: f64 = 1e-9;
        x >= self.xmin - EPS && x <= self.xmax + EPS && y >= self.ymin - EPS && y <= self.ymax + EPS
    }

    /// The four edges of the rectangle as wall segments.
    pub fn walls(&self) -> Vec<Segment> {
        let Bounds {
            xmin,
            ymin,
            xmax,
            ymax,
        } = *self;
        vec![
            Segment([xmin, ymin, xmax, ymin]),
            Segment([xmax, ymin, xmax, ymax]),
            Segment([xmax, ymax, xmin, ymax]),
            Segment([xmin, ymax, xmin, ymin]),
        ]
    }
}

/// A wall segment `[x1, y1, x2, y2]` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment(pub [f64; 4]);

impl Segment {
    /// Closest point on the segment to `(px, py)`.
    pub fn closest_point(&self, px: f64, py: f64) -> (f64, f64) {
        let [x1, y1, x2, y2] = self.0;
        let (dx, dy) = (x2 - x1, y2 - y1);
        let len2 = dx * dx + dy * dy;
        if len2 == 0.0 {
            return (x1, y1);
        }
        let u = (((px - x1) * dx + (py - y1) * dy) / len2).clamp(0.0, 1.0);
        (x1 + u * dx, y1 + u * dy)
    }

    pub fn distance_to(&self, px: f64, py: f64) -> f64 {
        let (cx, cy) = self.closest_point(px, py);
        (px - cx).hypot(py - cy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleMap {
    pub bounds: Bounds,
    pub segments: Vec<Segment>,
}

impl ObstacleMap {
    pub fn new(bounds: Bounds, segments: Vec<Segment>) -> Result<Self, ModelError> {
        if !(bounds.xmin < bounds.xmax && bounds.ymin < bounds.ymax) {
            return Err(ModelError::validation("map", "bounds must have positive extent"));
        }
        for (i, s) in segments.iter().enumerate() {
            let [x1, y1, x2, y2] = s.0;
            if !(bounds.contains(x1, y1) && bounds.contains(x2, y2)) {
                return Err(ModelError::validation(
                    "map",
                    format!("segment {i} {:?} lies outside the bounds", s.0),
                ));
            }
        }
        Ok(ObstacleMap { bounds, segments })
    }

    /// Distance from a point to the nearest segment, `None` for an empty map.
    pub fn nearest_segment_distance(&self, x: f64, y: f64) -> Option<(f64, &Segment)> {
        self.segments
            .iter()
            .map(|s| (s.distance_to(x, y), s))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }

    pub fn transformed(&self, tf: &RigidTransform) -> ObstacleMap {
        // Bounds are only used for validation; the transformed map keeps the
        // axis-aligned box that encloses the transformed corners.
        let corners = [
            tf.apply(self.bounds.xmin, self.bounds.ymin),
            tf.apply(self.bounds.xmax, self.bounds.ymin),
            tf.apply(self.bounds.xmax, self.bounds.ymax),
            tf.apply(self.bounds.xmin, self.bounds.ymax),
        ];
        let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&(f64, f64)) -> f64| {
            corners.iter().map(pick).fold(init, f)
        };
        let bounds = Bounds {
            xmin: fold(f64::min, f64::INFINITY, |c| c.0),
            ymin: fold(f64::min, f64::INFINITY, |c| c.1),
            xmax: fold(f64::max, f64::NEG_INFINITY, |c| c.0),
            ymax: fold(f64::max, f64::NEG_INFINITY, |c| c.1),
        };
        let segments = self
            .segments
            .iter()
            .map(|s| {
                let [x1, y1, x2, y2] = s.0;
                let (a, b) = tf.apply(x1, y1);
                let (c, d) = tf.apply(x2, y2);
                Segment([a, b, c, d])
            })
            .collect();
        ObstacleMap { bounds, segments }
    }
}

/// Rotation by `angle` about the origin followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub angle: f64,
    pub dx: f64,
    pub dy: f64,
}

impl RigidTransform {
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.angle.sin_cos();
        (c * x - s * y + self.dx, s * x + c * y + self.dy)
    }

    pub fn apply_pose(&self, p: &Pose2D) -> Pose2D {
        let (x, y) = self.apply(p.x, p.y);
        Pose2D::new(x, y, p.theta + self.angle)
    }
}

/// One recorded run of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    pub scenario_id: String,
    pub run_index: u32,
    pub goal: Pose2D,
    pub robot: Trajectory,
    pub agents: Vec<Trajectory>,
    pub map: Option<ObstacleMap>,
}

impl ExperimentRecord {
    /// Copy of the record whose robot trajectory is resampled on a uniform
    /// clock. Agents keep their native samples and are interpolated on
    /// demand at the robot timestamps.
    pub fn resampled(&self, dt: f64) -> Result<ExperimentRecord, ModelError> {
        Ok(ExperimentRecord {
            robot: resample(&self.robot, dt)?,
            ..self.clone()
        })
    }

    pub fn transformed(&self, tf: &RigidTransform) -> ExperimentRecord {
        ExperimentRecord {
            goal: tf.apply_pose(&self.goal),
            robot: self.robot.transformed(tf),
            agents: self.agents.iter().map(|a| a.transformed(tf)).collect(),
            map: self.map.as_ref().map(|m| m.transformed(tf)),
            ..self.clone()
        }
    }
}
