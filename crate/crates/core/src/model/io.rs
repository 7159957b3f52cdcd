use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Bounds, ExperimentRecord, ModelError, ObstacleMap, Pose2D, Segment, SubjectKind, TimedState, Trajectory};

#[derive(Debug, Serialize, Deserialize)]
struct ExperimentFile {
    experiment_id: String,
    scenario_id: String,
    run_index: u32,
    goal: Pose2D,
    robot: RobotFile,
    #[serde(default)]
    agents: Vec<AgentFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    map: Option<MapFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RobotFile {
    states: Vec<TimedState>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AgentFile {
    id: String,
    states: Vec<TimedState>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MapFile {
    bounds: Bounds,
    #[serde(default)]
    segments: Vec<Segment>,
}

fn with_file(path: &Path, err: ModelError) -> ModelError {
    match err {
        ModelError::Validation { context, message } => ModelError::Validation {
            context: format!("{}: {}", path.display(), context),
            message,
        },
        other => other,
    }
}

/// Reads and validates a single experiment file.
pub fn load_experiment(path: &Path, strict: bool) -> Result<ExperimentRecord, ModelError> {
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ExperimentFile = serde_json::from_str(&text).map_err(|e| ModelError::Schema {
        file: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if file.run_index == 0 {
        return Err(ModelError::validation(
            path.display().to_string(),
            "run_index must be >= 1",
        ));
    }
    let goal = Pose2D::new(file.goal.x, file.goal.y, file.goal.theta);
    if !(goal.x.is_finite() && goal.y.is_finite() && goal.theta.is_finite()) {
        return Err(ModelError::validation(path.display().to_string(), "goal is not finite"));
    }

    let robot = Trajectory::new("robot", SubjectKind::Robot, file.robot.states)
        .map_err(|e| with_file(path, e))?;
    if robot.t_first().abs() > 1e-6 {
        log::warn!(
            "{}: robot trajectory starts at t={} instead of 0",
            path.display(),
            robot.t_first()
        );
    }
    if let Some(violation) = robot.velocity_violation() {
        if strict {
            return Err(ModelError::validation(
                format!("{}: robot", path.display()),
                format!("velocity limit violated: {violation}"),
            ));
        }
        log::warn!("{}: robot velocity limit violated: {violation}", path.display());
    }

    let agents = file
        .agents
        .into_iter()
        .map(|a| Trajectory::new(a.id, SubjectKind::Human, a.states))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| with_file(path, e))?;
    let map = file
        .map
        .map(|m| ObstacleMap::new(m.bounds, m.segments))
        .transpose()
        .map_err(|e| with_file(path, e))?;

    Ok(ExperimentRecord {
        experiment_id: file.experiment_id,
        scenario_id: file.scenario_id,
        run_index: file.run_index,
        goal,
        robot,
        agents,
        map,
    })
}

/// Loads every `*.json` experiment file in `dir`, ordered by
/// `(scenario_id, run_index, experiment_id)`.
pub fn load_dataset(dir: &Path, strict: bool) -> Result<Vec<ExperimentRecord>, ModelError> {
    let entries = fs::read_dir(dir).map_err(|source| ModelError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| ModelError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        log::warn!("{}: no experiment files found", dir.display());
    }
    let mut records = paths
        .iter()
        .map(|p| load_experiment(p, strict))
        .collect::<Result<Vec<_>, _>>()?;
    records.sort_by(|a, b| {
        (a.scenario_id.as_str(), a.run_index, a.experiment_id.as_str()).cmp(&(
            b.scenario_id.as_str(),
            b.run_index,
            b.experiment_id.as_str(),
        ))
    });
    for w in records.windows(2) {
        if w[0].experiment_id == w[1].experiment_id {
            return Err(ModelError::validation(
                dir.display().to_string(),
                format!("duplicate experiment_id '{}'", w[0].experiment_id),
            ));
        }
    }
    Ok(records)
}

fn to_file(rec: &ExperimentRecord) -> ExperimentFile {
    ExperimentFile {
        experiment_id: rec.experiment_id.clone(),
        scenario_id: rec.scenario_id.clone(),
        run_index: rec.run_index,
        goal: rec.goal,
        robot: RobotFile {
            states: rec.robot.states().to_vec(),
        },
        agents: rec
            .agents
            .iter()
            .map(|a| AgentFile {
                id: a.subject_id().to_string(),
                states: a.states().to_vec(),
            })
            .collect(),
        map: rec.map.as_ref().map(|m| MapFile {
            bounds: m.bounds,
            segments: m.segments.clone(),
        }),
    }
}

pub fn save_experiment(rec: &ExperimentRecord, path: &Path) -> Result<(), ModelError> {
    let text = serde_json::to_string_pretty(&to_file(rec)).expect("experiment serializes");
    fs::write(path, text).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes one `<experiment_id>.json` per record into `dir`.
pub fn save_dataset(records: &[ExperimentRecord], dir: &Path) -> Result<(), ModelError> {
    fs::create_dir_all(dir).map_err(|source| ModelError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for rec in records {
        save_experiment(rec, &dir.join(format!("{}.json", rec.experiment_id)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"{
        "experiment_id": "exp01", "scenario_id": "passing", "run_index": 1,
        "goal": {"x": 4.5, "y": 1.0, "theta": 0.0},
        "robot": {"states": [
            {"t": 0.0, "x": 0.5, "y": 1.0, "theta": 0.0, "v_lin": 0.4, "v_ang": 0.0},
            {"t": 1.0, "x": 0.9, "y": 1.0, "theta": 0.0, "v_lin": 0.4, "v_ang": 0.0}
        ]},
        "agents": []
    }"#;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn missing_field_names_field_and_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "bad.json", &VALID.replace("\"scenario_id\": \"passing\",", ""));
        let err = load_experiment(&p, false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("scenario_id"), "{msg}");
        assert!(msg.contains("bad.json"), "{msg}");
    }

    #[test]
    fn non_increasing_time_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let text = r#"{
            "experiment_id": "e", "scenario_id": "s", "run_index": 1,
            "goal": {"x": 0, "y": 0, "theta": 0},
            "robot": {"states": [
                {"t": 0.0, "x": 0, "y": 0, "theta": 0, "v_lin": 0, "v_ang": 0},
                {"t": 0.1, "x": 0, "y": 0, "theta": 0, "v_lin": 0, "v_ang": 0},
                {"t": 0.1, "x": 0, "y": 0, "theta": 0, "v_lin": 0, "v_ang": 0}
            ]}
        }"#;
        let p = write(dir.path(), "e.json", text);
        assert!(matches!(load_experiment(&p, false), Err(ModelError::Validation { .. })));
    }

    #[test]
    fn strict_mode_rejects_speeding_robot() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "fast.json", &VALID.replace("\"v_lin\": 0.4", "\"v_lin\": 0.9"));
        assert!(load_experiment(&p, false).is_ok());
        assert!(load_experiment(&p, true).is_err());
    }

    #[test]
    fn empty_directory_gives_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_dataset(dir.path(), true).unwrap().is_empty());
    }

    #[test]
    fn dataset_is_ordered_by_scenario_then_run() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.json", &VALID.replace("\"run_index\": 1", "\"run_index\": 2").replace("exp01", "p2"));
        write(dir.path(), "b.json", &VALID.replace("exp01", "p1"));
        write(dir.path(), "c.json", &VALID.replace("passing", "crossing").replace("exp01", "c1"));
        let ids: Vec<String> = load_dataset(dir.path(), false)
            .unwrap()
            .into_iter()
            .map(|r| r.experiment_id)
            .collect();
        assert_eq!(ids, ["c1", "p1", "p2"]);
    }
}
