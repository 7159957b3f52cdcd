//! Conversion from wide tracker CSV exports into experiment records.
//!
//! One CSV per run, named `<scenario>_run<k>.csv`. Columns:
//!
//! | column                  | meaning                                   |
//! |-------------------------|-------------------------------------------|
//! | `time` (or `t`)         | timestamp, scaled by `time_scale` to s    |
//! | `robot_x`, `robot_y`    | robot position (m)                        |
//! | `robot_yaw`             | robot heading (rad)                       |
//! | `robot_v`, `robot_w`    | optional robot velocities; else differenced |
//! | `<id>_x`, `<id>_y`      | position of tracked person `<id>`         |
//! | `<id>_yaw`              | optional heading; else direction of motion |
//!
//! Empty person cells mean the person is not tracked at that instant. A gap
//! splits the person into separate trajectories (`<id>#1`, `<id>#2`, ...).

use std::fs;
use std::path::{Path, PathBuf};

use super::{wrap_angle, ExperimentRecord, ModelError, ObstacleMap, Pose2D, SubjectKind, TimedState, Trajectory};

#[derive(Debug, Clone)]
pub struct WideCsvOptions {
    /// Multiplier converting the `time` column to seconds.
    pub time_scale: f64,
    /// Map attached to every converted record.
    pub map: Option<ObstacleMap>,
}

impl Default for WideCsvOptions {
    fn default() -> Self {
        WideCsvOptions {
            time_scale: 1.0,
            map: None,
        }
    }
}

fn schema(path: &Path, message: impl Into<String>) -> ModelError {
    ModelError::Schema {
        file: path.to_path_buf(),
        message: message.into(),
    }
}

/// Splits `passing_run2` into `("passing", 2)`.
fn parse_stem(path: &Path) -> Result<(String, u32), ModelError> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| schema(path, "file name is not valid UTF-8"))?;
    let (scenario, run) = stem
        .rsplit_once("_run")
        .ok_or_else(|| schema(path, "file name must look like <scenario>_run<k>.csv"))?;
    let run: u32 = run
        .parse()
        .map_err(|_| schema(path, format!("cannot parse run index from '{stem}'")))?;
    if scenario.is_empty() || run == 0 {
        return Err(schema(path, format!("bad scenario/run in '{stem}'")));
    }
    Ok((scenario.to_string(), run))
}

struct Sample {
    t: f64,
    x: f64,
    y: f64,
    yaw: Option<f64>,
    v: Option<f64>,
    w: Option<f64>,
}

/// Builds states from raw samples, differencing whatever velocity or
/// heading information is absent.
fn build_states(samples: &[Sample]) -> Vec<TimedState> {
    let n = samples.len();
    let mut states = Vec::with_capacity(n);
    let mut last_heading = 0.0;
    for i in 0..n {
        let (a, b) = if i + 1 < n { (i, i + 1) } else { (i.saturating_sub(1), i) };
        let dt = samples[b].t - samples[a].t;
        let (dx, dy) = (samples[b].x - samples[a].x, samples[b].y - samples[a].y);
        let speed = if dt > 0.0 { dx.hypot(dy) / dt } else { 0.0 };
        let heading = match samples[i].yaw {
            Some(yaw) => yaw,
            None if dx.hypot(dy) > 1e-9 => dy.atan2(dx),
            None => last_heading,
        };
        last_heading = heading;
        states.push(TimedState::new(
            samples[i].t,
            Pose2D::new(samples[i].x, samples[i].y, heading),
            samples[i].v.unwrap_or(speed),
            0.0,
        ));
    }
    for i in 0..n {
        if let Some(w) = samples[i].w {
            states[i].v_ang = w;
            continue;
        }
        let (a, b) = if i + 1 < n { (i, i + 1) } else { (i.saturating_sub(1), i) };
        let dt = states[b].t - states[a].t;
        if dt > 0.0 {
            states[i].v_ang = wrap_angle(states[b].pose.theta - states[a].pose.theta) / dt;
        }
    }
    states
}

/// Converts one wide CSV run into an experiment record.
pub fn convert_wide_csv(path: &Path, opts: &WideCsvOptions) -> Result<ExperimentRecord, ModelError> {
    let (scenario_id, run_index) = parse_stem(path)?;
    let csv_err = |source| ModelError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let time_col = col("time")
        .or_else(|| col("t"))
        .ok_or_else(|| schema(path, "missing column 'time'"))?;
    let need = |name: &str| col(name).ok_or_else(|| schema(path, format!("missing column '{name}'")));
    let (rx, ry, ryaw) = (need("robot_x")?, need("robot_y")?, need("robot_yaw")?);
    let (rv, rw) = (col("robot_v"), col("robot_w"));

    // Person ids in first-appearance order of their `_x` column.
    let mut people: Vec<(String, usize, usize, Option<usize>)> = Vec::new();
    for h in &headers {
        if let Some(id) = h.strip_suffix("_x") {
            if id == "robot" {
                continue;
            }
            let y = need(&format!("{id}_y"))?;
            people.push((id.to_string(), col(h).unwrap(), y, col(&format!("{id}_yaw"))));
        }
    }

    let mut robot: Vec<Sample> = Vec::new();
    // Per person: contiguous sighting blocks, and whether the last block is
    // still open.
    let mut tracks: Vec<(Vec<Vec<Sample>>, bool)> = people.iter().map(|_| (Vec::new(), false)).collect();
    let mut t0: Option<f64> = None;
    let mut last_t = f64::NEG_INFINITY;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<Option<f64>, ModelError> {
            let cell = record.get(i).unwrap_or("").trim();
            if cell.is_empty() {
                return Ok(None);
            }
            cell.parse::<f64>()
                .map(Some)
                .map_err(|_| schema(path, format!("line {line}: '{}' is not a number", cell)))
        };
        let required = |i: usize| -> Result<f64, ModelError> {
            num(i)?.ok_or_else(|| schema(path, format!("line {line}: empty '{}'", headers[i])))
        };
        let raw_t = required(time_col)? * opts.time_scale;
        let origin = *t0.get_or_insert(raw_t);
        let t = raw_t - origin;
        if t <= last_t {
            log::warn!("{}: line {line}: dropping non-increasing timestamp {t}", path.display());
            continue;
        }
        last_t = t;
        robot.push(Sample {
            t,
            x: required(rx)?,
            y: required(ry)?,
            yaw: Some(required(ryaw)?),
            v: rv.map(num).transpose()?.flatten(),
            w: rw.map(num).transpose()?.flatten(),
        });
        for ((_, xc, yc, yawc), (blocks, open)) in people.iter().zip(tracks.iter_mut()) {
            match (num(*xc)?, num(*yc)?) {
                (Some(x), Some(y)) => {
                    let sample = Sample {
                        t,
                        x,
                        y,
                        yaw: yawc.map(num).transpose()?.flatten(),
                        v: None,
                        w: None,
                    };
                    match blocks.last_mut() {
                        Some(block) if *open => block.push(sample),
                        _ => blocks.push(vec![sample]),
                    }
                    *open = true;
                }
                _ => *open = false,
            }
        }
    }

    let robot = Trajectory::new("robot", SubjectKind::Robot, build_states(&robot))
        .map_err(|e| schema(path, e.to_string()))?;
    let mut agents = Vec::new();
    for (p, (blocks, _)) in tracks.into_iter().enumerate() {
        let usable: Vec<&Vec<Sample>> = blocks.iter().filter(|b| b.len() >= 2).collect();
        for (i, block) in usable.iter().enumerate() {
            let id = if usable.len() == 1 {
                people[p].0.clone()
            } else {
                format!("{}#{}", people[p].0, i + 1)
            };
            agents.push(
                Trajectory::new(id, SubjectKind::Human, build_states(block))
                    .map_err(|e| schema(path, e.to_string()))?,
            );
        }
    }
    let last = robot.states()[robot.states().len() - 1].pose;
    Ok(ExperimentRecord {
        experiment_id: format!("{scenario_id}_run{run_index}"),
        scenario_id,
        run_index,
        goal: last,
        robot,
        agents,
        map: opts.map.clone(),
    })
}

/// Converts every `*.csv` in `dir`, returning records in file-name order.
pub fn convert_wide_csv_dir(dir: &Path, opts: &WideCsvOptions) -> Result<Vec<ExperimentRecord>, ModelError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|source| ModelError::Io {
            path: dir.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| convert_wide_csv(p, opts))
        .collect()
}
