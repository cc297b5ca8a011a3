//! Vehicle state, control inputs and the rear-axle kinematic bicycle model.
//!
//! Every planner and controller in the crate exchanges [`VehicleState`]s and
//! [`Trajectory`]s produced by [`propagate`] / [`predict_trajectory`].

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Point};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

/// Acceleration bounds [m/s²].
pub const ACCEL_MIN: f64 = -1.0;
pub const ACCEL_MAX: f64 = 1.0;
/// Steering-angle bound [rad], symmetric.
pub const STEER_MAX: f64 = FRAC_PI_4;

/// Pose and speed of the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    /// [m]
    pub x: f64,
    /// [m]
    pub y: f64,
    /// Heading [rad], kept in (−π, π].
    pub theta: f64,
    /// Speed [m/s], never negative.
    pub v: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, theta: f64, v: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
            v: v.max(0.0),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Acceleration / steering pair, clamped to the admissible box on construction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    a: f64,
    delta: f64,
}

impl ControlInput {
    pub fn new(a: f64, delta: f64) -> Self {
        Self {
            a: a.clamp(ACCEL_MIN, ACCEL_MAX),
            delta: delta.clamp(-STEER_MAX, STEER_MAX),
        }
    }

    /// Full brake, wheels straight.
    pub fn brake() -> Self {
        Self::new(ACCEL_MIN, 0.0)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// [m]
    pub wheelbase: f64,
    /// [m/s]
    pub v_max: f64,
    /// Radius of the disc used for every collision query [m].
    pub footprint_radius: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 2.5,
            v_max: 10.0,
            footprint_radius: 1.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wheelbase > 0.0 && self.v_max > 0.0 && self.footprint_radius > 0.0) {
            return Err(Error::InvalidConfig(
                "vehicle wheelbase, v_max and footprint_radius must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Ordered vehicle states sampled every `dt` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    states: Vec<VehicleState>,
    dt: f64,
}

impl Trajectory {
    pub fn new(states: Vec<VehicleState>, dt: f64) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Shape("trajectory must contain at least one state".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig(format!("trajectory dt must be > 0, got {dt}")));
        }
        Ok(Self { states, dt })
    }

    pub fn states(&self) -> &[VehicleState] {
        &self.states
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn first(&self) -> &VehicleState {
        &self.states[0]
    }

    pub fn last(&self) -> &VehicleState {
        &self.states[self.states.len() - 1]
    }

    pub fn push(&mut self, state: VehicleState) {
        self.states.push(state);
    }

    pub fn into_states(self) -> Vec<VehicleState> {
        self.states
    }
}

/// One kinematic-bicycle step.
pub fn propagate(
    state: &VehicleState,
    u: &ControlInput,
    dt: f64,
    params: &VehicleParams,
) -> VehicleState {
    let (sin, cos) = state.theta.sin_cos();
    VehicleState {
        x: state.x + state.v * cos * dt,
        y: state.y + state.v * sin * dt,
        theta: normalize_angle(state.theta + state.v / params.wheelbase * u.delta().tan() * dt),
        v: (state.v + u.a() * dt).clamp(0.0, params.v_max),
    }
}

/// Rolls `state` forward `steps` times under the held control `u`.
///
/// The returned trajectory has `steps + 1` states and starts with `state` itself.
pub fn predict_trajectory(
    state: &VehicleState,
    u: &ControlInput,
    steps: usize,
    dt: f64,
    params: &VehicleParams,
) -> Trajectory {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(*state);
    let mut current = *state;
    for _ in 0..steps {
        current = propagate(&current, u, dt, params);
        states.push(current);
    }
    Trajectory { states, dt }
}
