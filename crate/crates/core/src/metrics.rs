//! Run-level performance and smoothness metrics.

use crate::sim::{Outcome, RunResult};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub outcome: Outcome,
    /// Simulated time to the goal; `None` unless the goal was reached [s].
    pub completion_time: Option<f64>,
    pub elapsed_sim_time: f64,
    pub path_length: f64,
    pub mean_speed: f64,
    pub min_clearance: f64,
    pub mean_clearance: f64,
    pub accel_variance: f64,
    pub steer_variance: f64,
    pub accel_sign_flips: usize,
    pub steer_sign_flips: usize,
}

/// Population variance; 0 for an empty slice.
pub fn variance(xs: &[f64]) -> f64 {
    let Some(&shift) = xs.first() else {
        return 0.0;
    };
    // Shifted data keeps a constant trace at exactly zero.
    let n = xs.len() as f64;
    let mean = xs.iter().map(|x| x - shift).sum::<f64>() / n;
    xs.iter().map(|x| (x - shift - mean) * (x - shift - mean)).sum::<f64>() / n
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sign changes between consecutive nonzero entries.
pub fn sign_flips(xs: &[f64]) -> usize {
    let mut flips = 0;
    let mut last = 0.0f64;
    for &x in xs {
        if x == 0.0 || x.is_nan() {
            continue;
        }
        if last != 0.0 && x.signum() != last.signum() {
            flips += 1;
        }
        last = x;
    }
    flips
}

/// Median of finite values; `None` if there are none.
pub fn median(xs: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

pub fn compute_metrics(run: &RunResult) -> MetricSummary {
    let accels: Vec<f64> = run.controls.iter().map(|c| c.a).collect();
    let steers: Vec<f64> = run.controls.iter().map(|c| c.delta).collect();
    let speeds: Vec<f64> = run.trajectory.states().iter().map(|s| s.v).collect();
    MetricSummary {
        outcome: run.outcome,
        completion_time: (run.outcome == Outcome::GoalReached).then_some(run.elapsed_sim_time),
        elapsed_sim_time: run.elapsed_sim_time,
        path_length: run.path_length,
        mean_speed: mean(&speeds),
        min_clearance: run.min_clearance,
        mean_clearance: mean(&run.clearances),
        accel_variance: variance(&accels),
        steer_variance: variance(&steers),
        accel_sign_flips: sign_flips(&accels),
        steer_sign_flips: sign_flips(&steers),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_examples() {
        assert_eq!(variance(&[]), 0.0);
        assert_eq!(variance(&[3.0, 3.0]), 0.0);
        assert_eq!(variance(&[1.0, -1.0]), 1.0);
        let xs = [0.3, -0.2, 0.9, 0.1];
        let scaled: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        assert!((variance(&scaled) - 4.0 * variance(&xs)).abs() < 1e-12);
    }

    #[test]
    fn flips_ignore_zeros() {
        assert_eq!(sign_flips(&[1.0, 0.0, -1.0, -0.5, 0.0, 2.0]), 2);
        assert_eq!(sign_flips(&[0.0, 0.0]), 0);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[f64::INFINITY, 1.0]), Some(1.0));
    }
}
