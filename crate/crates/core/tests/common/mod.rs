//! Independent reference implementations used by the integration and
//! acceptance tests. Deliberately naive: quadratic loops, no shared code
//! with the library.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use socnav_core::model::{ExperimentRecord, Pose2D, SubjectKind, TimedState, Trajectory};

/// Rank of each value: 1 + number smaller + half the number of other equal
/// values.
pub fn naive_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn naive_spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&naive_ranks(x), &naive_ranks(y))
}

/// Tau-b by enumerating every pair.
pub fn naive_kendall(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[i] > x[j]) as i32 - (x[i] < x[j]) as i32;
            let b = (y[i] > y[j]) as i32 - (y[i] < y[j]) as i32;
            if a == 0 {
                tx += 1;
            }
            if b == 0 {
                ty += 1;
            }
            match a * b {
                1 => c += 1,
                -1 => d += 1,
                _ => {}
            }
        }
    }
    let total = (n * (n - 1) / 2) as i64;
    (c - d) as f64 / (((total - tx) as f64) * ((total - ty) as f64)).sqrt()
}

/// Two-sided exact Kendall p-value by enumerating all permutations of
/// `0..n` (untied data only, small `n`).
pub fn brute_force_kendall_p(n: usize, discordant: usize) -> f64 {
    let total_pairs = n * (n - 1) / 2;
    let c = discordant.min(total_pairs - discordant);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut hits = 0u64;
    let mut count = 0u64;
    permute(&mut perm, 0, &mut |p| {
        let inv = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
        count += 1;
        if inv <= c {
            hits += 1;
        }
    });
    (2.0 * hits as f64 / count as f64).min(1.0)
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

/// Adjusted Rand index by classifying all `C(n, 2)` pairs.
pub fn pair_counting_ari(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut n11, mut n10, mut n01, mut n00) = (0i128, 0i128, 0i128, 0i128);
    for i in 0..n {
        for j in i + 1..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1,
                (true, false) => n10 += 1,
                (false, true) => n01 += 1,
                (false, false) => n00 += 1,
            }
        }
    }
    let num = 2 * (n00 * n11 - n01 * n10);
    let den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

/// Mean silhouette computed point by point from the definition.
pub fn direct_silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..n {
        let own: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == labels[i]).collect();
        if own.is_empty() {
            continue;
        }
        let a = own.iter().map(|&j| euclid(&points[i], &points[j])).sum::<f64>() / own.len() as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c == labels[i] {
                continue;
            }
            let members: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
            if members.is_empty() {
                continue;
            }
            let mean = members.iter().map(|&j| euclid(&points[i], &points[j])).sum::<f64>() / members.len() as f64;
            b = b.min(mean);
        }
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

/// Random vector with values drawn from a small integer range when `ties`
/// is set, so repeated values are common.
pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, ties: bool) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if ties {
                rng.gen_range(0..(n / 3).max(2)) as f64
            } else {
                rng.gen::<f64>() * 100.0 - 50.0
            }
        })
        .collect()
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..k)).collect()
}

/// Gaussian-ish blobs around `k` random centres.
pub fn random_blobs(rng: &mut ChaCha8Rng, n: usize, dim: usize, k: usize) -> Vec<Vec<f64>> {
    let centres: Vec<Vec<f64>> = (0..k).map(|_| (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
    (0..n)
        .map(|i| {
            let c = &centres[i % k];
            c.iter().map(|&v| v + rng.gen_range(-1.0..1.0)).collect()
        })
        .collect()
}

/// Trajectory sampled every `dt` from `f(t) = (x, y, theta, v)`.
pub fn sampled(id: &str, kind: SubjectKind, t0: f64, t1: f64, dt: f64, f: impl Fn(f64) -> (f64, f64, f64, f64)) -> Trajectory {
    let n = ((t1 - t0) / dt).round() as usize;
    let states = (0..=n)
        .map(|k| {
            let t = t0 + k as f64 * dt;
            let (x, y, th, v) = f(t);
            TimedState::new(t, Pose2D::new(x, y, th), v, 0.0)
        })
        .collect();
    Trajectory::new(id, kind, states).unwrap()
}

pub fn record(id: &str, robot: Trajectory, agents: Vec<Trajectory>) -> ExperimentRecord {
    let last = robot.states()[robot.states().len() - 1].pose;
    ExperimentRecord {
        experiment_id: id.to_string(),
        scenario_id: "test".to_string(),
        run_index: 1,
        goal: last,
        robot,
        agents,
        map: None,
    }
}

/// Copy of `rec` with every agent re-sampled at the robot timestamps it
/// covers and pushed `delta` metres further from the robot along the
/// robot→agent line.
pub fn pushed_apart(rec: &ExperimentRecord, delta: f64) -> ExperimentRecord {
    let mut out = rec.clone();
    out.agents = rec
        .agents
        .iter()
        .filter_map(|a| {
            let states: Vec<TimedState> = rec
                .robot
                .states()
                .iter()
                .filter_map(|r| {
                    let mut s = a.state_at(r.t)?;
                    let (dx, dy) = (s.pose.x - r.pose.x, s.pose.y - r.pose.y);
                    let d = dx.hypot(dy);
                    if d > 0.0 {
                        s.pose.x += dx / d * delta;
                        s.pose.y += dy / d * delta;
                    }
                    Some(s)
                })
                .collect();
            Trajectory::new(a.subject_id(), SubjectKind::Human, states).ok()
        })
        .collect();
    out
}

/// Copy of `rec` with every agent re-sampled at the robot timestamps it
/// covers (no displacement).
pub fn on_robot_clock(rec: &ExperimentRecord) -> ExperimentRecord {
    pushed_apart(rec, 0.0)
}
