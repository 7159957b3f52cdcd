//! Deterministic synthetic scenarios with scripted kinematics.
//!
//! The robot follows a piecewise-linear path at constant speed and turns in
//! place at each corner; people walk straight between waypoints or replay
//! the robot's path with a delay. Nothing reacts to anything else, so metric
//! values have closed forms for simple layouts.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::metrics::{compute_all, MetricError, MetricOptions};
use crate::model::{
    wrap_angle, Bounds, ExperimentRecord, HmEntry, ModelError, ObstacleMap, Pose2D, Segment, SubjectKind, SurveyRow,
    SurveyTable, TimedState, Trajectory, ROBOT_MAX_ANGULAR_VELOCITY, ROBOT_MAX_LINEAR_VELOCITY,
};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic spec '{id}': {message}")]
    Invalid { id: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Passing,
    Overtaking,
    Crossing,
    NarrowTurn,
    Mixed,
    Curious,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    fn dist(&self, o: &Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

/// Layout the scenario runs in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapChoice {
    None,
    /// 5 × 2 m corridor.
    Corridor,
    /// 5 × 2 m crossing area.
    Crossing,
    /// 4 × 3 m room split by a wall, forcing a U-turn.
    UTurn,
    /// 3 × 4 m room.
    Room,
    Custom { bounds: Bounds, segments: Vec<Segment> },
}

impl MapChoice {
    pub fn build(&self) -> Result<Option<ObstacleMap>, ModelError> {
        let rect = |w: f64, h: f64| Bounds {
            xmin: 0.0,
            ymin: 0.0,
            xmax: w,
            ymax: h,
        };
        let (bounds, extra) = match self {
            MapChoice::None => return Ok(None),
            MapChoice::Corridor | MapChoice::Crossing => (rect(5.0, 2.0), vec![]),
            MapChoice::UTurn => (rect(4.0, 3.0), vec![Segment([0.0, 1.5, 2.8, 1.5])]),
            MapChoice::Room => (rect(3.0, 4.0), vec![]),
            MapChoice::Custom { bounds, segments } => (*bounds, segments.clone()),
        };
        let mut segments = bounds.walls();
        segments.extend(extra);
        ObstacleMap::new(bounds, segments).map(Some)
    }
}

/// Scripted person. Walks `start → waypoints → goal` at `speed` starting at
/// `start_time`, or, with `follow_delay`, replays the robot's motion that
/// many seconds late.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub start: Point,
    pub goal: Point,
    pub speed: f64,
    #[serde(default)]
    pub waypoints: Vec<Point>,
    #[serde(default)]
    pub start_time: f64,
    #[serde(default)]
    pub follow_delay: Option<f64>,
}

impl AgentSpec {
    pub fn walk(start: Point, goal: Point, speed: f64) -> Self {
        AgentSpec {
            start,
            goal,
            speed,
            waypoints: Vec::new(),
            start_time: 0.0,
            follow_delay: None,
        }
    }

    pub fn still(at: Point) -> Self {
        AgentSpec::walk(at, at, 0.0)
    }
}

fn default_dt() -> f64 {
    0.05
}

fn default_turn_rate() -> f64 {
    1.0
}

fn default_run() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub experiment_id: String,
    #[serde(default)]
    pub scenario_id: Option<String>,
    #[serde(default = "default_run")]
    pub run_index: u32,
    pub scenario_kind: ScenarioKind,
    /// Robot cruise speed (m/s), at most 0.6.
    pub robot_speed: f64,
    /// Robot waypoints from start to goal; a single point means standing.
    pub robot_path: Vec<Point>,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    #[serde(default = "MapChoice::none")]
    pub map: MapChoice,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    /// Run length (s). Defaults to the robot's travel time; longer values
    /// keep the robot waiting at its goal.
    #[serde(default)]
    pub duration: Option<f64>,
    /// In-place turning rate at corners (rad/s).
    #[serde(default = "default_turn_rate")]
    pub turn_rate: f64,
    /// Standard deviation of Gaussian position jitter added to people (m).
    #[serde(default)]
    pub agent_noise: f64,
}

impl MapChoice {
    fn none() -> Self {
        MapChoice::None
    }
}

impl ScenarioKind {
    fn name(self) -> &'static str {
        match self {
            ScenarioKind::Passing => "passing",
            ScenarioKind::Overtaking => "overtaking",
            ScenarioKind::Crossing => "crossing",
            ScenarioKind::NarrowTurn => "narrow_turn",
            ScenarioKind::Mixed => "mixed",
            ScenarioKind::Curious => "curious",
            ScenarioKind::Custom => "custom",
        }
    }
}

/// One leg of scripted motion.
#[derive(Debug, Clone, Copy)]
enum Phase {
    Move { from: Point, to: Point, speed: f64, heading: f64 },
    Turn { at: Point, from: f64, delta: f64, rate: f64 },
    Wait { at: Point, heading: f64 },
}

impl Phase {
    fn duration(&self) -> f64 {
        match *self {
            Phase::Move { from, to, speed, .. } => from.dist(&to) / speed,
            Phase::Turn { delta, rate, .. } => delta.abs() / rate,
            Phase::Wait { .. } => 0.0,
        }
    }

    /// Pose and velocities `u` seconds into the phase.
    fn state(&self, u: f64) -> (Pose2D, f64, f64) {
        match *self {
            Phase::Move { from, to, speed, heading } => {
                let f = (u / self.duration()).clamp(0.0, 1.0);
                (
                    Pose2D::new(from.x + (to.x - from.x) * f, from.y + (to.y - from.y) * f, heading),
                    speed,
                    0.0,
                )
            }
            Phase::Turn { at, from, delta, rate } => {
                let f = (u / self.duration()).clamp(0.0, 1.0);
                (Pose2D::new(at.x, at.y, from + delta * f), 0.0, rate * delta.signum())
            }
            Phase::Wait { at, heading } => (Pose2D::new(at.x, at.y, heading), 0.0, 0.0),
        }
    }
}

struct Script {
    phases: Vec<(f64, Phase)>,
    end: f64,
    rest: Phase,
}

impl Script {
    /// Path at constant speed, turning in place at every corner when
    /// `turn_rate` is given (otherwise the heading snaps).
    fn new(path: &[Point], speed: f64, turn_rate: Option<f64>, start: f64) -> Script {
        let mut phases = Vec::new();
        let mut t = start;
        let mut heading: Option<f64> = None;
        for w in path.windows(2) {
            if w[0].dist(&w[1]) == 0.0 {
                continue;
            }
            let h = (w[1].y - w[0].y).atan2(w[1].x - w[0].x);
            if let (Some(prev), Some(rate)) = (heading, turn_rate) {
                let delta = wrap_angle(h - prev);
                if delta != 0.0 {
                    let p = Phase::Turn {
                        at: w[0],
                        from: prev,
                        delta,
                        rate,
                    };
                    phases.push((t, p));
                    t += p.duration();
                }
            }
            let p = Phase::Move {
                from: w[0],
                to: w[1],
                speed,
                heading: h,
            };
            phases.push((t, p));
            t += p.duration();
            heading = Some(h);
        }
        let last = *path.last().expect("non-empty path");
        Script {
            phases,
            end: t,
            rest: Phase::Wait {
                at: last,
                heading: heading.unwrap_or(0.0),
            },
        }
    }

    fn state(&self, t: f64) -> (Pose2D, f64, f64) {
        let idx = self.phases.partition_point(|(t0, _)| *t0 <= t);
        if idx == 0 {
            return match self.phases.first() {
                Some((_, p)) => p.state(0.0),
                None => self.rest.state(0.0),
            };
        }
        let (t0, p) = self.phases[idx - 1];
        if t > self.end {
            self.rest.state(0.0)
        } else {
            p.state(t - t0)
        }
    }
}

/// Sample times `start + k·dt` up to `end`, always including `end`.
fn clock(start: f64, end: f64, dt: f64) -> Vec<f64> {
    let mut ts = Vec::new();
    let mut k = 0u64;
    loop {
        let t = start + k as f64 * dt;
        if t >= end - dt * 1e-6 {
            break;
        }
        ts.push(t);
        k += 1;
    }
    ts.push(end);
    ts
}

impl SynthSpec {
    fn invalid(&self, message: impl Into<String>) -> SynthError {
        SynthError::Invalid {
            id: self.experiment_id.clone(),
            message: message.into(),
        }
    }

    fn validate(&self, map: Option<&ObstacleMap>) -> Result<(), SynthError> {
        if self.dt.is_nan() || self.dt <= 0.0 {
            return Err(self.invalid("dt must be positive"));
        }
        if self.robot_path.is_empty() {
            return Err(self.invalid("robot_path needs at least one point"));
        }
        if !(self.robot_speed > 0.0 && self.robot_speed <= ROBOT_MAX_LINEAR_VELOCITY) {
            return Err(self.invalid(format!(
                "robot_speed {} outside (0, {ROBOT_MAX_LINEAR_VELOCITY}]",
                self.robot_speed
            )));
        }
        if !(self.turn_rate > 0.0 && self.turn_rate <= ROBOT_MAX_ANGULAR_VELOCITY) {
            return Err(self.invalid(format!(
                "turn_rate {} outside (0, {ROBOT_MAX_ANGULAR_VELOCITY}]",
                self.turn_rate
            )));
        }
        if self.run_index == 0 {
            return Err(self.invalid("run_index must be >= 1"));
        }
        if self.agent_noise < 0.0 {
            return Err(self.invalid("agent_noise must be >= 0"));
        }
        for (i, a) in self.agents.iter().enumerate() {
            let moves = a.start.dist(&a.goal) > 0.0 || !a.waypoints.is_empty();
            if a.follow_delay.is_none() && moves && (a.speed.is_nan() || a.speed <= 0.0) {
                return Err(self.invalid(format!("agent {i} moves but has speed {}", a.speed)));
            }
            if a.follow_delay.is_some_and(|d| d < 0.0) {
                return Err(self.invalid(format!("agent {i} has a negative follow delay")));
            }
        }
        if let Some(map) = map {
            let agent_points = self
                .agents
                .iter()
                .filter(|a| a.follow_delay.is_none())
                .flat_map(|a| std::iter::once(&a.start).chain(&a.waypoints).chain(std::iter::once(&a.goal)));
            for p in self.robot_path.iter().chain(agent_points) {
                if !map.bounds.contains(p.x, p.y) {
                    return Err(self.invalid(format!("waypoint ({}, {}) lies outside the map bounds", p.x, p.y)));
                }
            }
        }
        Ok(())
    }
}

/// Builds the experiment record described by `spec`.
pub fn generate(spec: &SynthSpec) -> Result<ExperimentRecord, SynthError> {
    let map = spec.map.build()?;
    spec.validate(map.as_ref())?;

    let robot_script = Script::new(&spec.robot_path, spec.robot_speed, Some(spec.turn_rate), 0.0);
    let end = match spec.duration {
        Some(d) if d < robot_script.end - 1e-9 => {
            return Err(spec.invalid(format!("duration {d} is shorter than the robot's travel time {}", robot_script.end)))
        }
        Some(d) => d,
        None => robot_script.end,
    };
    if end.is_nan() || end <= 0.0 {
        return Err(spec.invalid("a standing robot needs an explicit duration"));
    }
    let robot_states = clock(0.0, end, spec.dt)
        .into_iter()
        .map(|t| {
            let (pose, v, w) = robot_script.state(t);
            TimedState::new(t, pose, v, w)
        })
        .collect();
    let robot = Trajectory::new("robot", SubjectKind::Robot, robot_states)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.agent_noise.max(f64::MIN_POSITIVE)).expect("valid std");
    let mut agents = Vec::with_capacity(spec.agents.len());
    for (i, a) in spec.agents.iter().enumerate() {
        let states: Vec<TimedState> = if let Some(delay) = a.follow_delay {
            clock(delay, end, spec.dt)
                .into_iter()
                .map(|t| {
                    let (pose, v, _) = robot_script.state(t - delay);
                    TimedState::new(t, pose, v, 0.0)
                })
                .collect()
        } else {
            let mut path = vec![a.start];
            path.extend(&a.waypoints);
            path.push(a.goal);
            let script = Script::new(&path, a.speed.max(f64::MIN_POSITIVE), None, a.start_time);
            // People that stand still stay for the whole run.
            let stop = if script.end > a.start_time { script.end } else { end };
            clock(a.start_time, stop, spec.dt)
                .into_iter()
                .map(|t| {
                    let (pose, v, _) = script.state(t);
                    TimedState::new(t, pose, v, 0.0)
                })
                .collect()
        };
        let states = states
            .into_iter()
            .map(|mut s| {
                if spec.agent_noise > 0.0 {
                    s.pose.x += noise.sample(&mut rng);
                    s.pose.y += noise.sample(&mut rng);
                }
                s
            })
            .collect();
        agents.push(Trajectory::new(format!("person{}", i + 1), SubjectKind::Human, states)?);
    }

    let goal = spec.robot_path[spec.robot_path.len() - 1];
    let final_heading = robot.states()[robot.states().len() - 1].pose.theta;
    Ok(ExperimentRecord {
        experiment_id: spec.experiment_id.clone(),
        scenario_id: spec
            .scenario_id
            .clone()
            .unwrap_or_else(|| spec.scenario_kind.name().to_string()),
        run_index: spec.run_index,
        goal: Pose2D::new(goal.x, goal.y, final_heading),
        robot,
        agents,
        map,
    })
}

/// Straight corridor pass: robot along `y = 1` from `x = 0.5` to `4.5`, one
/// person walking the opposite way offset by `gap`.
pub fn passing(id: &str, run: u32, robot_speed: f64, agent_speed: f64, gap: f64) -> SynthSpec {
    SynthSpec {
        experiment_id: id.to_string(),
        scenario_id: None,
        run_index: run,
        scenario_kind: ScenarioKind::Passing,
        robot_speed,
        robot_path: vec![Point::new(0.5, 1.0), Point::new(4.5, 1.0)],
        agents: vec![AgentSpec::walk(Point::new(4.9, 1.0 + gap), Point::new(0.1, 1.0 + gap), agent_speed)],
        map: MapChoice::None,
        dt: 0.05,
        seed: 0,
        duration: None,
        turn_rate: 1.0,
        agent_noise: 0.0,
    }
}

/// Per-run variation used by the fixture corpus: how cautious the robot is.
#[derive(Debug, Clone, Copy)]
struct Style {
    speed: f64,
    clearance: f64,
}

const STYLES: [Style; 3] = [
    Style {
        speed: 0.3,
        clearance: 0.55,
    },
    Style {
        speed: 0.55,
        clearance: 0.0,
    },
    Style {
        speed: 0.42,
        clearance: 0.3,
    },
];

/// The eight benchmark scenarios with three runs each: 24 specs on the
/// corridor, crossing, U-turn and room layouts. Run-to-run variation
/// mimics differently tuned controllers; `seed` jitters person speeds
/// within 0.4–1.0 m/s.
pub fn fixture_specs(seed: u64) -> Vec<SynthSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs = Vec::with_capacity(24);
    let scenarios = [
        "passing",
        "overtaking",
        "crossing_1",
        "crossing_2",
        "crossing_3",
        "narrow_turn",
        "mixed",
        "curious",
    ];
    for scenario in scenarios {
        for (r, style) in STYLES.iter().enumerate() {
            let run = r as u32 + 1;
            let mut walker = || rng.gen_range(0.4..=1.0);
            let c = style.clearance;
            let (kind, map, robot_path, agents) = match scenario {
                "passing" => (
                    ScenarioKind::Passing,
                    MapChoice::Corridor,
                    vec![Point::new(0.4, 0.8), Point::new(2.5, 0.8 - c * 0.5), Point::new(4.6, 0.8)],
                    vec![AgentSpec::walk(Point::new(4.8, 1.3), Point::new(0.2, 1.3), walker())],
                ),
                "overtaking" => (
                    ScenarioKind::Overtaking,
                    MapChoice::Corridor,
                    vec![Point::new(0.3, 1.0), Point::new(2.0, 0.6 - c * 0.4), Point::new(4.7, 0.6 - c * 0.4)],
                    vec![AgentSpec::walk(Point::new(1.2, 1.3), Point::new(4.8, 1.3), 0.4)],
                ),
                "crossing_1" => (
                    ScenarioKind::Crossing,
                    MapChoice::Crossing,
                    vec![Point::new(0.3, 1.0), Point::new(4.7, 1.0)],
                    vec![
                        AgentSpec {
                            start_time: 1.0 + c * 2.0,
                            ..AgentSpec::walk(Point::new(2.2, 0.1), Point::new(2.6, 1.9), walker())
                        },
                        AgentSpec {
                            start_time: 2.5 + c * 2.0,
                            ..AgentSpec::walk(Point::new(3.2, 0.1), Point::new(3.6, 1.9), walker())
                        },
                    ],
                ),
                "crossing_2" => (
                    ScenarioKind::Crossing,
                    MapChoice::Crossing,
                    vec![Point::new(0.3, 1.0), Point::new(4.7, 1.0)],
                    vec![
                        AgentSpec {
                            start_time: 1.5 + c,
                            ..AgentSpec::walk(Point::new(2.0, 0.1), Point::new(2.0, 1.9), walker())
                        },
                        AgentSpec {
                            start_time: 3.0 + c * 3.0,
                            ..AgentSpec::walk(Point::new(3.5, 1.9), Point::new(3.5, 0.1), walker())
                        },
                    ],
                ),
                "crossing_3" => {
                    let s = walker();
                    (
                        ScenarioKind::Crossing,
                        MapChoice::Crossing,
                        vec![Point::new(0.3, 1.0), Point::new(4.7, 1.0)],
                        vec![
                            AgentSpec {
                                start_time: 1.0 + c * 2.0,
                                ..AgentSpec::walk(Point::new(2.0, 0.1), Point::new(2.0, 1.9), s)
                            },
                            AgentSpec {
                                start_time: 1.0 + c * 2.0,
                                ..AgentSpec::walk(Point::new(2.5, 0.1), Point::new(2.5, 1.9), s)
                            },
                            AgentSpec {
                                start_time: 4.0 + c * 2.0,
                                ..AgentSpec::walk(Point::new(3.8, 1.9), Point::new(3.8, 0.1), walker())
                            },
                        ],
                    )
                }
                "narrow_turn" => (
                    ScenarioKind::NarrowTurn,
                    MapChoice::UTurn,
                    vec![
                        Point::new(0.5, 0.75),
                        Point::new(3.4, 0.75),
                        Point::new(3.4, 2.25),
                        Point::new(0.5, 2.25 + c * 0.5),
                    ],
                    vec![
                        AgentSpec {
                            start_time: 5.0,
                            ..AgentSpec::walk(Point::new(3.6, 2.6), Point::new(3.6, 0.3), walker())
                        },
                        AgentSpec::walk(Point::new(0.2, 2.1), Point::new(2.6, 2.1), 0.4),
                    ],
                ),
                "mixed" => (
                    ScenarioKind::Mixed,
                    MapChoice::Room,
                    vec![Point::new(0.5, 0.4), Point::new(1.5 + c, 2.0), Point::new(2.5, 3.6)],
                    vec![
                        AgentSpec::still(Point::new(1.6, 1.9)),
                        AgentSpec::walk(Point::new(2.8, 0.5), Point::new(0.2, 3.0), walker()),
                        AgentSpec {
                            start_time: 4.0,
                            ..AgentSpec::walk(Point::new(2.8, 3.8), Point::new(1.8, 3.2), 0.4)
                        },
                    ],
                ),
                _ => (
                    ScenarioKind::Curious,
                    MapChoice::Crossing,
                    vec![Point::new(0.3, 1.0), Point::new(2.5, 1.0 - c), Point::new(4.7, 1.0)],
                    vec![AgentSpec {
                        follow_delay: Some(1.2 + c * 3.0),
                        ..AgentSpec::still(Point::new(0.3, 1.0))
                    }],
                ),
            };
            specs.push(SynthSpec {
                experiment_id: format!("{scenario}_run{run}"),
                scenario_id: Some(scenario.to_string()),
                run_index: run,
                scenario_kind: kind,
                robot_speed: style.speed,
                robot_path,
                agents,
                map,
                dt: 0.05,
                seed: seed.wrapping_add(specs.len() as u64),
                duration: None,
                turn_rate: 1.0,
                agent_noise: 0.01,
            });
        }
    }
    specs
}

/// Survey answers for synthetic runs, derived from their metrics so the
/// correlation stages have signal to find. Comfort-type questions follow
/// distance and proxemics, smoothness follows time and heading changes;
/// Gaussian noise is added and curious-person runs get no
/// unobtrusiveness score.
pub fn fixture_survey(records: &[ExperimentRecord], opts: &MetricOptions, seed: u64) -> Result<SurveyTable, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.15).expect("valid std");
    let mut rows = Vec::with_capacity(records.len());
    for rec in records {
        let m = compute_all(rec, opts)?;
        let amd = m.amd.unwrap_or(3.0).min(3.0);
        let comfort = 1.5 + amd * 0.9 - m.pr_i * 0.03 - m.pr_pe * 0.01;
        let smooth = 4.6 - m.chc / PI * 0.6 - m.ttg * 0.04;
        let foresight = 1.2 + amd * 0.8 + m.arv * 2.0 - m.pr_i * 0.02;
        let mut entry = |base: f64| {
            let mean = (base + noise.sample(&mut rng)).clamp(1.0, 5.0);
            let mean = (mean * 100.0).round() / 100.0;
            Some(HmEntry {
                mean,
                std: 0.8,
                n_responses: 70,
            })
        };
        let unobtrusiveness = entry(comfort - 0.2);
        let entries = [
            if rec.scenario_id.starts_with("curious") {
                None
            } else {
                unobtrusiveness
            },
            entry(comfort),
            entry(smooth),
            entry(foresight),
        ];
        rows.push(SurveyRow {
            experiment_id: rec.experiment_id.clone(),
            entries,
        });
    }
    Ok(SurveyTable::new(rows)?)
}
