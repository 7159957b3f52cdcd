use super::{interpolate, ModelError, TimedState, Trajectory};

/// Resamples a trajectory on a uniform clock `t_first + k·dt`.
///
/// Positions and velocities are interpolated linearly, headings along the
/// shortest arc. The final recorded state is always kept, so both endpoints
/// survive exactly; the last step may therefore be shorter than `dt`.
pub fn resample(traj: &Trajectory, dt: f64) -> Result<Trajectory, ModelError> {
    let duration = traj.duration();
    if !(dt > 0.0 && dt < duration) {
        return Err(ModelError::InvalidStep { dt, duration });
    }
    let states = traj.states();
    let t0 = traj.t_first();
    let t_end = traj.t_last();
    // Grid points closer than this to the final sample are merged into it.
    let merge_eps = dt * 1e-6;

    let mut out = Vec::with_capacity((duration / dt).ceil() as usize + 2);
    let mut seg = 0usize;
    let mut k = 0u64;
    loop {
        let t = t0 + k as f64 * dt;
        if t >= t_end - merge_eps {
            break;
        }
        while seg + 1 < states.len() - 1 && states[seg + 1].t <= t {
            seg += 1;
        }
        let a = &states[seg];
        let b = &states[seg + 1];
        if (t - a.t).abs() <= merge_eps {
            out.push(TimedState { t, ..*a });
        } else {
            out.push(interpolate(a, b, t));
        }
        k += 1;
    }
    out.push(states[states.len() - 1]);
    Trajectory::new(traj.subject_id(), traj.kind(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Pose2D, SubjectKind};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn traj(points: &[(f64, f64, f64)]) -> Trajectory {
        Trajectory::new(
            "robot",
            SubjectKind::Robot,
            points
                .iter()
                .map(|&(t, x, th)| TimedState::new(t, Pose2D::new(x, 0.0, th), 0.2, 0.0))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn linear_interpolation_of_positions() {
        let r = resample(&traj(&[(0.0, 0.0, 0.0), (1.0, 2.0, 0.0)]), 0.5).unwrap();
        let xs: Vec<f64> = r.states().iter().map(|s| s.pose.x).collect();
        assert_eq!(xs.len(), 3);
        assert_abs_diff_eq!(xs[0], 0.0);
        assert_abs_diff_eq!(xs[1], 1.0);
        assert_abs_diff_eq!(xs[2], 2.0);
    }

    #[test]
    fn heading_wraps_through_pi() {
        let r = resample(&traj(&[(0.0, 0.0, 3.0), (1.0, 0.0, -3.0)]), 0.5).unwrap();
        let mid = r.states()[1].pose.theta;
        // Shortest arc from +3 to -3 crosses π: the midpoint sits at ±π,
        // never near 0.
        assert!((mid.abs() - PI).abs() < 1e-9, "midpoint heading {mid}");
    }

    #[test]
    fn native_step_is_identity() {
        let pts: Vec<(f64, f64, f64)> = (0..11)
            .map(|i| (i as f64 * 0.1, (i as f64 * 0.37).sin(), (i as f64 * 0.2) - 1.0))
            .collect();
        let original = traj(&pts);
        let r = resample(&original, 0.1).unwrap();
        assert_eq!(r.states().len(), original.states().len());
        for (a, b) in r.states().iter().zip(original.states()) {
            assert_abs_diff_eq!(a.t, b.t, epsilon = 1e-9);
            assert_abs_diff_eq!(a.pose.x, b.pose.x, epsilon = 1e-9);
            assert_abs_diff_eq!(a.pose.theta, b.pose.theta, epsilon = 1e-9);
        }
    }

    #[test]
    fn step_not_shorter_than_duration_is_rejected() {
        let t = traj(&[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0)]);
        assert!(matches!(resample(&t, 1.0), Err(ModelError::InvalidStep { .. })));
        assert!(resample(&t, 0.0).is_err());
    }

    #[test]
    fn endpoints_preserved_with_uneven_tail() {
        let t = traj(&[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0), (1.13, 1.5, 0.0)]);
        let r = resample(&t, 0.25).unwrap();
        assert_eq!(r.states().first(), t.states().first());
        assert_eq!(r.states().last(), t.states().last());
    }
}
