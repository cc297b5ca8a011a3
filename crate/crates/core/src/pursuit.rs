//! Pure pursuit with perpendicular-offset obstacle avoidance.
//!
//! A lookahead target is picked on the reference path, shifted sideways by each
//! configured offset in both directions, and the collision-free candidate closest
//! to the path's final point wins. The pursuit law turns the winner into a
//! steering command; acceleration tracks a curvature-limited speed.

use crate::error::{Error, Result};
use crate::geometry::{menger_curvature, normalize_angle, Point};
use crate::gridmap::{is_free_point, is_free_segment, is_free_trajectory, Obstacle, OccupancyGrid};
use crate::vehicle::{predict_trajectory, ControlInput, Trajectory, VehicleParams, VehicleState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitConfig {
    /// [m]
    pub lookahead: f64,
    /// Sideways target offsets d_1..d_n [m].
    pub adjust_distances: Vec<f64>,
    /// Gain in `v = v_max / (1 + k·|κ|)`.
    pub curvature_gain: f64,
    /// Proportional gain from speed error to acceleration [1/s].
    pub speed_gain: f64,
    pub horizon: usize,
    /// [s]
    pub dt: f64,
}

impl Default for PursuitConfig {
    fn default() -> Self {
        Self {
            lookahead: 3.0,
            adjust_distances: vec![1.0, 2.0],
            curvature_gain: 4.0,
            speed_gain: 1.0,
            horizon: 10,
            dt: 0.1,
        }
    }
}

impl PursuitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lookahead > 0.0) {
            return Err(Error::InvalidConfig("pursuit lookahead must be > 0".into()));
        }
        if self.adjust_distances.is_empty() || self.adjust_distances.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidConfig(
                "pursuit adjust_distances must be a non-empty list of positive values".into(),
            ));
        }
        if !(self.curvature_gain >= 0.0 && self.speed_gain >= 0.0) {
            return Err(Error::InvalidConfig("pursuit gains must be >= 0".into()));
        }
        if self.horizon < 1 || !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("pursuit horizon must be >= 1 and dt > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PursuitDecision {
    /// Chosen (possibly shifted) target.
    pub target: Point,
    /// Position of the chosen target in the candidate list, `None` when infeasible.
    pub candidate_index: Option<usize>,
    pub control: ControlInput,
    pub predicted: Trajectory,
    pub feasible: bool,
}

fn nearest_index(points: &[Point], p: Point) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, q) in points.iter().enumerate() {
        let d = q.dist(p);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Closest path point at or beyond the vehicle's nearest index whose distance is
/// at least `lookahead`; the final point when none qualifies.
pub fn select_target(s: &VehicleState, path: &[Point], lookahead: f64) -> Point {
    let p = s.position();
    let start = nearest_index(path, p);
    path[start..]
        .iter()
        .map(|&q| (q.dist(p), q))
        .filter(|(d, _)| *d >= lookahead)
        .fold(None::<(f64, Point)>, |best, cur| match best {
            Some(b) if b.0 <= cur.0 => Some(b),
            _ => Some(cur),
        })
        .map_or(path[path.len() - 1], |(_, q)| q)
}

/// Unit vectors perpendicular to the direction from the vehicle to `t`: left, then right.
pub fn perpendicular_offsets(s: &VehicleState, t: Point) -> Result<(Point, Point)> {
    let d = t - s.position();
    let norm = d.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateTarget);
    }
    let v1 = Point::new(-d.y / norm, d.x / norm);
    Ok((v1, Point::new(-v1.x, -v1.y)))
}

/// `t` itself, then `t + d_i·v1` for every offset, then `t + d_i·v2`.
pub fn candidate_targets(t: Point, v1: Point, v2: Point, adjust_distances: &[f64]) -> Vec<Point> {
    let mut out = Vec::with_capacity(2 * adjust_distances.len() + 1);
    out.push(t);
    out.extend(adjust_distances.iter().map(|&d| t + v1 * d));
    out.extend(adjust_distances.iter().map(|&d| t + v2 * d));
    out
}

/// Curvature-limited speed target for a candidate at `t`.
pub fn curvature_speed(t: Point, path: &[Point], curvature_gain: f64, v_max: f64) -> f64 {
    let kappa = if path.len() < 3 {
        0.0
    } else {
        let j = nearest_index(path, t).clamp(1, path.len() - 2);
        menger_curvature(path[j - 1], path[j], path[j + 1])
    };
    v_max / (1.0 + curvature_gain * kappa.abs())
}

/// Candidate state: the candidate position with the vehicle's current heading and
/// the curvature-limited speed.
pub fn candidate_state(
    s: &VehicleState,
    t: Point,
    path: &[Point],
    cfg: &PursuitConfig,
    params: &VehicleParams,
) -> VehicleState {
    VehicleState::new(
        t.x,
        t.y,
        s.theta,
        curvature_speed(t, path, cfg.curvature_gain, params.v_max),
    )
}

/// Pursuit law toward `target` while tracking `target_speed`.
pub fn pursuit_control(
    s: &VehicleState,
    target: Point,
    target_speed: f64,
    cfg: &PursuitConfig,
    params: &VehicleParams,
) -> ControlInput {
    let d = target - s.position();
    let ld = d.norm();
    let delta = if ld == 0.0 {
        0.0
    } else {
        let alpha = normalize_angle(d.y.atan2(d.x) - s.theta);
        (2.0 * params.wheelbase * alpha.sin() / ld).atan()
    };
    ControlInput::new(cfg.speed_gain * (target_speed - s.v), delta)
}

/// One pure-pursuit decision.
///
/// A candidate is admissible when its point, the straight segment to it, and the
/// rollout of its control are all collision-free. Among admissible candidates the
/// one nearest the path's final point wins, earlier candidates winning ties. With
/// no admissible candidate the decision is a full brake with `feasible = false`.
pub fn pursuit_step(
    s: &VehicleState,
    path: &[Point],
    obstacles: &[Obstacle],
    grid: &OccupancyGrid,
    cfg: &PursuitConfig,
    params: &VehicleParams,
) -> PursuitDecision {
    let goal = path[path.len() - 1];
    let radius = params.footprint_radius;
    let here = s.position();
    let brake = |target: Point| PursuitDecision {
        target,
        candidate_index: None,
        control: ControlInput::brake(),
        predicted: predict_trajectory(s, &ControlInput::brake(), cfg.horizon, cfg.dt, params),
        feasible: false,
    };

    let t = select_target(s, path, cfg.lookahead);
    let Ok((v1, v2)) = perpendicular_offsets(s, t) else {
        return brake(t);
    };

    let mut best: Option<(f64, usize, PursuitDecision)> = None;
    for (i, cand) in candidate_targets(t, v1, v2, &cfg.adjust_distances).into_iter().enumerate() {
        let goal_dist = cand.dist(goal);
        if best.as_ref().is_some_and(|(d, _, _)| *d <= goal_dist) {
            continue;
        }
        if !is_free_point(grid, cand, obstacles, radius)
            || !is_free_segment(grid, here, cand, obstacles, radius)
        {
            continue;
        }
        let cs = candidate_state(s, cand, path, cfg, params);
        let control = pursuit_control(s, cand, cs.v, cfg, params);
        let predicted = predict_trajectory(s, &control, cfg.horizon, cfg.dt, params);
        if !is_free_trajectory(grid, &predicted, obstacles, radius) {
            continue;
        }
        best = Some((
            goal_dist,
            i,
            PursuitDecision {
                target: cand,
                candidate_index: Some(i),
                control,
                predicted,
                feasible: true,
            },
        ));
    }
    best.map_or_else(|| brake(t), |(_, _, d)| d)
}
