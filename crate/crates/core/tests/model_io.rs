use std::fs;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use socnav_core::model::{
    convert_wide_csv, convert_wide_csv_dir, load_experiment, load_survey, save_experiment, save_survey, ExperimentRecord,
    HmEntry, ModelError, Pose2D, SubjectKind, SurveyRow, SurveyTable, TimedState, Trajectory, WideCsvOptions,
};

const WIDE: &str = "\
time,robot_x,robot_y,robot_yaw,alice_x,alice_y,bob_x,bob_y,bob_yaw
100.0,0.0,0.0,0.0,3.0,1.0,1.0,2.0,1.5
100.5,0.2,0.0,0.0,2.8,1.0,1.0,2.1,1.5
101.0,0.4,0.0,0.0,,,1.0,2.2,1.5
101.5,0.6,0.0,0.0,2.4,1.0,1.0,2.3,1.5
102.0,0.8,0.0,0.0,2.2,1.0,1.0,2.4,1.5
";

#[test]
fn wide_csv_conversion() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("passing_run2.csv");
    fs::write(&path, WIDE).unwrap();
    let rec = convert_wide_csv(&path, &WideCsvOptions::default()).unwrap();
    assert_eq!(rec.experiment_id, "passing_run2");
    assert_eq!((rec.scenario_id.as_str(), rec.run_index), ("passing", 2));

    let r = rec.robot.states();
    assert_eq!(r.len(), 5);
    assert_eq!((r[0].t, r[4].t), (0.0, 2.0));
    // differenced speed: 0.2 m every 0.5 s
    assert_abs_diff_eq!(r[2].v_lin, 0.4, epsilon = 1e-12);
    assert_eq!(rec.goal, Pose2D::new(0.8, 0.0, 0.0));

    let ids: Vec<&str> = rec.agents.iter().map(|a| a.subject_id()).collect();
    assert_eq!(ids, ["alice#1", "alice#2", "bob"]);
    let alice = &rec.agents[0];
    // heading from the direction of motion (towards −x)
    assert_abs_diff_eq!(alice.states()[0].pose.theta.abs(), std::f64::consts::PI, epsilon = 1e-12);
    assert_abs_diff_eq!(alice.states()[0].v_lin, 0.4, epsilon = 1e-12);
    assert_abs_diff_eq!(rec.agents[2].states()[0].pose.theta, 1.5);
}

#[test]
fn wide_csv_time_scale_and_directory() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a_run1.csv"), WIDE).unwrap();
    fs::write(dir.path().join("a_run2.csv"), WIDE).unwrap();
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let opts = WideCsvOptions {
        time_scale: 2.0,
        map: None,
    };
    let recs = convert_wide_csv_dir(dir.path(), &opts).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[1].experiment_id, "a_run2");
    assert_eq!(recs[0].robot.t_last(), 4.0);
}

#[test]
fn wide_csv_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad_name = dir.path().join("passing.csv");
    fs::write(&bad_name, WIDE).unwrap();
    assert!(matches!(convert_wide_csv(&bad_name, &WideCsvOptions::default()), Err(ModelError::Schema { .. })));

    let no_robot = dir.path().join("x_run1.csv");
    fs::write(&no_robot, "time,alice_x,alice_y\n0,1,1\n1,1,2\n").unwrap();
    assert!(matches!(convert_wide_csv(&no_robot, &WideCsvOptions::default()), Err(ModelError::Schema { .. })));
}

#[test]
fn strict_mode_rejects_fast_robot() {
    let states = vec![
        TimedState::new(0.0, Pose2D::new(0.0, 0.0, 0.0), 0.0, 0.0),
        TimedState::new(1.0, Pose2D::new(2.0, 0.0, 0.0), 2.0, 0.0),
    ];
    let rec = ExperimentRecord {
        experiment_id: "fast".into(),
        scenario_id: "s".into(),
        run_index: 1,
        goal: Pose2D::new(2.0, 0.0, 0.0),
        robot: Trajectory::new("robot", SubjectKind::Robot, states).unwrap(),
        agents: vec![],
        map: None,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fast.json");
    save_experiment(&rec, &path).unwrap();
    assert!(load_experiment(&path, false).is_ok());
    assert!(load_experiment(&path, true).is_err());
}

fn state_strategy() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    (0.001f64..1.0, -50.0f64..50.0, -50.0f64..50.0, -3.1f64..3.1, 0.0f64..0.6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn experiment_json_round_trip(steps in prop::collection::vec(state_strategy(), 2..30), agents in 0usize..3) {
        let mut t = 0.0;
        let states: Vec<TimedState> = steps
            .iter()
            .map(|&(dt, x, y, th, v)| {
                t += dt;
                TimedState::new(t, Pose2D::new(x, y, th), v, 0.1)
            })
            .collect();
        let robot = Trajectory::new("robot", SubjectKind::Robot, states.clone()).unwrap();
        let people = (0..agents)
            .map(|i| Trajectory::new(format!("p{i}"), SubjectKind::Human, states.clone()).unwrap())
            .collect();
        let rec = ExperimentRecord {
            experiment_id: "e".into(),
            scenario_id: "s".into(),
            run_index: 3,
            goal: Pose2D::new(1.0, 2.0, 0.5),
            robot,
            agents: people,
            map: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.json");
        save_experiment(&rec, &path).unwrap();
        prop_assert_eq!(load_experiment(&path, false).unwrap(), rec);
    }

    #[test]
    fn survey_round_trip(rows in prop::collection::vec(prop::collection::vec(prop::option::of((1.0f64..=5.0, 0.0f64..2.0)), 4), 1..10)) {
        let rows: Vec<SurveyRow> = rows
            .into_iter()
            .enumerate()
            .map(|(i, cells)| {
                let mut entries = [None; 4];
                for (slot, c) in entries.iter_mut().zip(cells) {
                    *slot = c.map(|(mean, std)| HmEntry { mean, std, n_responses: 70 });
                }
                SurveyRow { experiment_id: format!("e{i}"), entries }
            })
            .filter(|r| r.entries.iter().any(Option::is_some))
            .collect();
        let table = SurveyTable::new(rows).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("survey.csv");
        save_survey(&table, &path).unwrap();
        prop_assert_eq!(load_survey(&path).unwrap(), table);
    }
}
