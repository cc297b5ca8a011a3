//! Grid-search model predictive control.
//!
//! Every `(a, δ)` pair of a uniform grid over the admissible control box is held
//! constant over the horizon, rolled out with the bicycle model, rejected if the
//! rollout collides, and scored by
//!
//! ```text
//! J = Σ_{i=1..N} ‖p_i − p_i^ref‖² + w_obs · θ_obs,i / (d_obs,i + ε) + w_dev · max(0, ‖p_i − p_i^ref‖ − d_max)²
//! ```
//!
//! where `d_obs,i` is the surface distance to the nearest obstacle (extrapolated to
//! step `i`) and `θ_obs,i` the absolute angle between the heading and the bearing
//! to that obstacle. The cheapest feasible pair wins.

use crate::error::{Error, Result};
use crate::geometry::normalize_angle;
use crate::gridmap::{is_free_trajectory, Obstacle, OccupancyGrid};
use crate::vehicle::{
    predict_trajectory, ControlInput, Trajectory, VehicleParams, VehicleState, ACCEL_MAX, STEER_MAX,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    /// Prediction horizon N [steps].
    pub horizon: usize,
    /// [s]
    pub dt: f64,
    /// Number of acceleration samples over [−1, 1].
    pub accel_samples: usize,
    /// Number of steering samples over [−π/4, π/4].
    pub steer_samples: usize,
    pub w_obs: f64,
    pub w_dev: f64,
    /// Deviation tube half-width [m].
    pub d_max: f64,
    /// [m]
    pub epsilon: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            dt: 0.1,
            accel_samples: 9,
            steer_samples: 9,
            w_obs: 2.0,
            w_dev: 1.0,
            d_max: 2.0,
            epsilon: 0.1,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::InvalidConfig("mpc horizon must be >= 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("mpc dt must be > 0".into()));
        }
        if self.accel_samples < 2 || self.steer_samples < 2 {
            return Err(Error::InvalidConfig("mpc control grids need >= 2 samples each".into()));
        }
        if !(self.w_obs >= 0.0 && self.w_dev >= 0.0) {
            return Err(Error::InvalidConfig("mpc weights must be >= 0".into()));
        }
        if !(self.d_max > 0.0 && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("mpc d_max and epsilon must be > 0".into()));
        }
        Ok(())
    }
}

/// Per-term sums of the MPC objective.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub tracking: f64,
    /// Weighted obstacle term.
    pub obstacle: f64,
    /// Obstacle term without `w_obs`.
    pub obstacle_unweighted: f64,
    pub deviation: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.tracking + self.obstacle + self.deviation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcDecision {
    pub control: ControlInput,
    /// Rollout of `control` over the horizon.
    pub predicted: Trajectory,
    pub cost: f64,
    pub breakdown: CostBreakdown,
    pub feasible: bool,
    /// Grid indices `(accel, steer)` of the chosen pair; `None` for the brake fallback.
    pub grid_index: Option<(usize, usize)>,
}

/// `n` evenly spaced values over `[-1, 1]`, endpoints included, exactly antisymmetric.
pub fn unit_grid(n: usize) -> Vec<f64> {
    let m = (n - 1) as f64;
    (0..n)
        .map(|k| (2.0 * k as f64 - m) / m)
        .collect()
}

pub fn accel_grid(n: usize) -> Vec<f64> {
    unit_grid(n).into_iter().map(|t| t * ACCEL_MAX).collect()
}

pub fn steer_grid(n: usize) -> Vec<f64> {
    unit_grid(n).into_iter().map(|t| t * STEER_MAX).collect()
}

/// `θ_obs / (d_obs + ε)` for the nearest obstacle (by surface distance), or 0.
pub fn obstacle_proximity(
    s: &VehicleState,
    obstacles: &[Obstacle],
    epsilon: f64,
    footprint_radius: f64,
) -> f64 {
    let p = s.position();
    let mut nearest: Option<(f64, &Obstacle)> = None;
    for o in obstacles {
        let d = (p.dist(o.center) - o.radius - footprint_radius).max(0.0);
        if nearest.is_none_or(|(nd, _)| d < nd) {
            nearest = Some((d, o));
        }
    }
    let Some((d, o)) = nearest else {
        return 0.0;
    };
    let bearing = (o.center.y - p.y).atan2(o.center.x - p.x);
    let theta_obs = normalize_angle(bearing - s.theta).abs();
    theta_obs / (d + epsilon)
}

pub fn obstacle_cost(
    s: &VehicleState,
    obstacles: &[Obstacle],
    w_obs: f64,
    epsilon: f64,
    footprint_radius: f64,
) -> f64 {
    w_obs * obstacle_proximity(s, obstacles, epsilon, footprint_radius)
}

/// Quadratic penalty on positional deviation beyond the `d_max` tube.
pub fn deviation_cost(s: &VehicleState, s_ref: &VehicleState, w_dev: f64, d_max: f64) -> f64 {
    let excess = (s.position().dist(s_ref.position()) - d_max).max(0.0);
    w_dev * excess * excess
}

/// Objective terms of `predicted` against `reference` (matched by index, steps 1..=N).
pub fn trajectory_cost_terms(
    predicted: &Trajectory,
    reference: &Trajectory,
    obstacles: &[Obstacle],
    cfg: &MpcConfig,
    params: &VehicleParams,
) -> Result<CostBreakdown> {
    let n = predicted.len() - 1;
    if reference.len() < n + 1 {
        return Err(Error::ReferenceExhausted {
            needed: n + 1,
            available: reference.len(),
        });
    }
    let mut terms = CostBreakdown::default();
    let mut moved = obstacles.to_vec();
    for i in 1..=n {
        let s = &predicted.states()[i];
        let r = &reference.states()[i];
        let t = i as f64 * predicted.dt();
        for (m, o) in moved.iter_mut().zip(obstacles) {
            *m = o.at_time(t);
        }
        let err = s.position().dist(r.position());
        terms.tracking += err * err;
        let prox = obstacle_proximity(s, &moved, cfg.epsilon, params.footprint_radius);
        terms.obstacle_unweighted += prox;
        terms.obstacle += cfg.w_obs * prox;
        terms.deviation += deviation_cost(s, r, cfg.w_dev, cfg.d_max);
    }
    Ok(terms)
}

pub fn trajectory_cost(
    predicted: &Trajectory,
    reference: &Trajectory,
    obstacles: &[Obstacle],
    cfg: &MpcConfig,
    params: &VehicleParams,
) -> Result<f64> {
    trajectory_cost_terms(predicted, reference, obstacles, cfg, params).map(|t| t.total())
}

/// Pads `reference` with copies of its last state up to `len` states.
fn padded_reference(reference: &Trajectory, len: usize) -> Trajectory {
    if reference.len() >= len {
        return reference.clone();
    }
    let mut out = reference.clone();
    let last = *reference.last();
    while out.len() < len {
        out.push(last);
    }
    out
}

/// Exhaustive search over the control grid.
///
/// Ties on cost go to the smaller |δ|, then the smaller |a|, then grid order
/// (acceleration-major). With no collision-free rollout the decision is a full
/// brake with `feasible = false`.
pub fn select_best_control(
    s: &VehicleState,
    reference: &Trajectory,
    grid: &OccupancyGrid,
    obstacles: &[Obstacle],
    cfg: &MpcConfig,
    params: &VehicleParams,
) -> MpcDecision {
    let reference = padded_reference(reference, cfg.horizon + 1);
    let accels = accel_grid(cfg.accel_samples);
    let steers = steer_grid(cfg.steer_samples);

    let mut best: Option<MpcDecision> = None;
    for (ai, &a) in accels.iter().enumerate() {
        for (si, &delta) in steers.iter().enumerate() {
            let u = ControlInput::new(a, delta);
            let predicted = predict_trajectory(s, &u, cfg.horizon, cfg.dt, params);
            if !is_free_trajectory(grid, &predicted, obstacles, params.footprint_radius) {
                continue;
            }
            let breakdown = trajectory_cost_terms(&predicted, &reference, obstacles, cfg, params)
                .expect("reference padded to horizon");
            let cost = breakdown.total();
            let better = match &best {
                None => true,
                Some(b) => {
                    cost < b.cost
                        || (cost == b.cost
                            && (delta.abs(), a.abs()) < (b.control.delta().abs(), b.control.a().abs()))
                }
            };
            if better {
                best = Some(MpcDecision {
                    control: u,
                    predicted,
                    cost,
                    breakdown,
                    feasible: true,
                    grid_index: Some((ai, si)),
                });
            }
        }
    }

    best.unwrap_or_else(|| {
        let u = ControlInput::brake();
        let predicted = predict_trajectory(s, &u, cfg.horizon, cfg.dt, params);
        let breakdown = trajectory_cost_terms(&predicted, &reference, obstacles, cfg, params)
            .expect("reference padded to horizon");
        MpcDecision {
            control: u,
            cost: breakdown.total(),
            predicted,
            breakdown,
            feasible: false,
            grid_index: None,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn straight_reference(s: &VehicleState, n: usize, dt: f64) -> Trajectory {
        let states = (0..=n)
            .map(|i| VehicleState::new(s.x + s.v * dt * i as f64, s.y, 0.0, s.v))
            .collect();
        Trajectory::new(states, dt).unwrap()
    }

    #[test]
    fn grids_are_symmetric_and_inclusive() {
        let g = steer_grid(9);
        assert_eq!(g[0], -STEER_MAX);
        assert_eq!(g[8], STEER_MAX);
        assert_eq!(g[4], 0.0);
        for k in 0..9 {
            assert_eq!(g[k], -g[8 - k]);
        }
        assert_eq!(accel_grid(2), vec![-1.0, 1.0]);
    }

    #[test]
    fn obstacle_cost_examples() {
        let p = VehicleParams {
            footprint_radius: 1.0,
            ..Default::default()
        };
        let s = VehicleState::new(0.0, 0.0, 0.0, 1.0);
        assert_eq!(obstacle_cost(&s, &[], 1.0, 0.1, p.footprint_radius), 0.0);

        // Surface distance 1 at bearing π/2.
        let side = Obstacle::fixed(Point::new(0.0, 3.0), 1.0).unwrap();
        let c = obstacle_cost(&s, &[side], 1.0, 0.1, p.footprint_radius);
        assert!((c - FRAC_PI_2 / 1.1).abs() < 1e-12);
        assert!((c - 1.42800).abs() < 1e-5);

        let ahead = Obstacle::fixed(Point::new(4.0, 0.0), 1.0).unwrap();
        let behind = Obstacle::fixed(Point::new(-4.0, 0.0), 1.0).unwrap();
        let c_ahead = obstacle_cost(&s, &[ahead], 1.0, 0.1, 1.0);
        let c_behind = obstacle_cost(&s, &[behind], 1.0, 0.1, 1.0);
        assert_eq!(c_ahead, 0.0);
        assert!((c_behind - PI / 2.1).abs() < 1e-12);
    }

    #[test]
    fn nearest_obstacle_only() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 1.0);
        let near = Obstacle::fixed(Point::new(0.0, 3.0), 1.0).unwrap();
        let far = Obstacle::fixed(Point::new(0.0, -10.0), 1.0).unwrap();
        assert_eq!(
            obstacle_cost(&s, &[near, far], 1.0, 0.1, 1.0),
            obstacle_cost(&s, &[near], 1.0, 0.1, 1.0)
        );
    }

    #[test]
    fn deviation_cost_examples() {
        let r = VehicleState::new(0.0, 0.0, 0.0, 0.0);
        let at = |d: f64| VehicleState::new(d, 0.0, 0.0, 0.0);
        assert_eq!(deviation_cost(&at(2.0), &r, 1.0, 2.0), 0.0);
        assert_eq!(deviation_cost(&at(3.0), &r, 1.0, 2.0), 1.0);
        assert_eq!(deviation_cost(&at(4.0), &r, 0.5, 2.0), 2.0);
    }

    #[test]
    fn trajectory_cost_examples() {
        let p = VehicleParams::default();
        let reference = Trajectory::new(
            (0..4).map(|i| VehicleState::new(i as f64, 0.0, 0.0, 1.0)).collect(),
            0.1,
        )
        .unwrap();
        let cfg = MpcConfig {
            horizon: 3,
            d_max: 2.0,
            ..Default::default()
        };
        assert_eq!(trajectory_cost(&reference, &reference, &[], &cfg, &p).unwrap(), 0.0);

        let shifted = Trajectory::new(
            (0..4).map(|i| VehicleState::new(i as f64, 1.0, 0.0, 1.0)).collect(),
            0.1,
        )
        .unwrap();
        assert_eq!(trajectory_cost(&shifted, &reference, &[], &cfg, &p).unwrap(), 3.0);
        let tight = MpcConfig {
            d_max: 0.5,
            w_dev: 1.0,
            ..cfg
        };
        assert_eq!(trajectory_cost(&shifted, &reference, &[], &tight, &p).unwrap(), 3.75);

        let short = Trajectory::new(reference.states()[..2].to_vec(), 0.1).unwrap();
        assert!(matches!(
            trajectory_cost(&shifted, &short, &[], &cfg, &p),
            Err(Error::ReferenceExhausted { needed: 4, available: 2 })
        ));
    }

    #[test]
    fn on_path_vehicle_keeps_wheels_straight() {
        let g = OccupancyGrid::empty(50, 50, 1.0).unwrap();
        let p = VehicleParams::default();
        let cfg = MpcConfig::default();
        let s = VehicleState::new(10.0, 25.0, 0.0, 2.0);
        let d = select_best_control(&s, &straight_reference(&s, cfg.horizon, cfg.dt), &g, &[], &cfg, &p);
        assert!(d.feasible);
        assert_eq!(d.control.delta(), 0.0);
        assert_eq!(d.control.a(), 0.0);
    }

    #[test]
    fn blocked_everywhere_falls_back_to_brake() {
        let g = OccupancyGrid::empty(50, 50, 1.0).unwrap();
        let p = VehicleParams::default();
        let cfg = MpcConfig::default();
        let s = VehicleState::new(10.0, 25.0, 0.0, 2.0);
        // The vehicle's own position is blocked, so every rollout fails at step 0.
        let wall = Obstacle::fixed(Point::new(10.5, 25.0), 1.0).unwrap();
        let d = select_best_control(&s, &straight_reference(&s, cfg.horizon, cfg.dt), &g, &[wall], &cfg, &p);
        assert!(!d.feasible);
        assert_eq!(d.control, ControlInput::new(-1.0, 0.0));
        assert_eq!(d.grid_index, None);
    }

    #[test]
    fn feasible_decisions_are_collision_free() {
        let g = OccupancyGrid::empty(50, 50, 1.0).unwrap();
        let p = VehicleParams::default();
        let cfg = MpcConfig::default();
        let s = VehicleState::new(10.0, 25.0, 0.0, 3.0);
        let obs = Obstacle::fixed(Point::new(13.5, 25.5), 1.0).unwrap();
        let d = select_best_control(&s, &straight_reference(&s, cfg.horizon, cfg.dt), &g, &[obs], &cfg, &p);
        assert!(d.feasible);
        assert!(is_free_trajectory(&g, &d.predicted, &[obs], p.footprint_radius));
        assert!(d.control.delta() < 0.0, "expected to steer right, got {:?}", d.control);
    }
}
