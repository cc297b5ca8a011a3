//! Scenario files and the versioned default configuration.
//!
//! Every block and field is optional in a scenario file; missing values come
//! from `config/defaults.json`, which is compiled in and echoed into artifacts.

use crate::CliError;
use infofusion_core::fusion::FusionConfig;
use infofusion_core::gridmap::load_grid;
use infofusion_core::mpc::MpcConfig;
use infofusion_core::planner::PlannerConfig;
use infofusion_core::pursuit::PursuitConfig;
use infofusion_core::sim::{ControllerKind, Scenario, SimConfig};
use infofusion_core::{Obstacle, Point, VehicleParams, VehicleState};
use serde::{Deserialize, Serialize};
use serde::de::DeserializeOwned;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

pub const DEFAULTS_JSON: &str = include_str!("../config/defaults.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub version: u32,
    pub goal_tolerance_m: f64,
    pub controller: ControllerKind,
    pub seed: u64,
    pub seeds: usize,
    pub vehicle: VehicleBlock,
    pub planner: PlannerBlock,
    pub mpc: MpcBlock,
    pub pursuit: PursuitBlock,
    pub fusion: FusionBlock,
    pub sim: SimBlock,
}

pub fn defaults() -> &'static Defaults {
    static CELL: OnceLock<Defaults> = OnceLock::new();
    CELL.get_or_init(|| serde_json::from_str(DEFAULTS_JSON).expect("embedded defaults parse"))
}

/// Parses `text` as a JSON object, overlays it on `base` one block deep and
/// deserializes the result. Syntax errors carry a line and column, schema
/// errors the offending field path.
pub fn merge_over_defaults<T: DeserializeOwned>(text: &str, mut base: Value, what: &str) -> Result<T, CliError> {
    let user: Value = serde_json::from_str(text).map_err(|e| {
        CliError::input(format!("{what} line {}, column {}: {e}", e.line(), e.column()))
    })?;
    let Value::Object(user) = user else {
        return Err(CliError::input(format!("{what}: top level must be a JSON object")));
    };
    let Value::Object(base_map) = &mut base else {
        unreachable!("defaults are an object");
    };
    for (key, value) in user {
        match (base_map.get_mut(&key), value) {
            (Some(Value::Object(b)), Value::Object(u)) => b.extend(u),
            (_, value) => {
                base_map.insert(key, value);
            }
        }
    }
    serde_path_to_error::deserialize(base).map_err(|e| {
        let path = e.path().to_string();
        CliError::input(format!("{what} field `{path}`: {}", e.into_inner()))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleBlock {
    pub wheelbase_m: f64,
    pub v_max_mps: f64,
    pub footprint_radius_m: f64,
}

impl VehicleBlock {
    pub fn to_core(&self) -> VehicleParams {
        VehicleParams {
            wheelbase: self.wheelbase_m,
            v_max: self.v_max_mps,
            footprint_radius: self.footprint_radius_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerBlock {
    pub max_iterations: usize,
    pub step_size_m: f64,
    pub goal_tolerance_m: f64,
    pub rewire_radius_m: f64,
    pub goal_bias: f64,
    pub clearance_m: f64,
}

impl PlannerBlock {
    pub fn to_core(&self, seed: u64) -> PlannerConfig {
        PlannerConfig {
            max_iterations: self.max_iterations,
            step_size: self.step_size_m,
            goal_tolerance: self.goal_tolerance_m,
            rewire_radius: self.rewire_radius_m,
            goal_bias: self.goal_bias,
            rng_seed: seed,
            clearance: self.clearance_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcBlock {
    pub horizon_steps: usize,
    pub dt_s: f64,
    pub accel_samples: usize,
    pub steer_samples: usize,
    pub w_obs: f64,
    pub w_dev: f64,
    pub d_max_m: f64,
    pub epsilon_m: f64,
}

impl MpcBlock {
    pub fn to_core(&self) -> MpcConfig {
        MpcConfig {
            horizon: self.horizon_steps,
            dt: self.dt_s,
            accel_samples: self.accel_samples,
            steer_samples: self.steer_samples,
            w_obs: self.w_obs,
            w_dev: self.w_dev,
            d_max: self.d_max_m,
            epsilon: self.epsilon_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PursuitBlock {
    pub lookahead_m: f64,
    pub adjust_distances_m: Vec<f64>,
    pub curvature_gain: f64,
    pub speed_gain_per_s: f64,
    pub horizon_steps: usize,
    pub dt_s: f64,
}

impl PursuitBlock {
    pub fn to_core(&self) -> PursuitConfig {
        PursuitConfig {
            lookahead: self.lookahead_m,
            adjust_distances: self.adjust_distances_m.clone(),
            curvature_gain: self.curvature_gain,
            speed_gain: self.speed_gain_per_s,
            horizon: self.horizon_steps,
            dt: self.dt_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionBlock {
    pub bins: usize,
    pub threshold: f64,
}

impl FusionBlock {
    pub fn to_core(&self) -> FusionConfig {
        FusionConfig {
            bins: self.bins,
            threshold: self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub dt_s: f64,
    pub max_steps: usize,
    pub cruise_speed_mps: f64,
    pub path_spacing_m: f64,
    pub tracker_window: usize,
    pub obstacle_jitter_m: f64,
    pub clearance_search_m: f64,
}

impl SimBlock {
    pub fn to_core(&self) -> SimConfig {
        SimConfig {
            dt: self.dt_s,
            max_steps: self.max_steps,
            cruise_speed: self.cruise_speed_mps,
            path_spacing: self.path_spacing_m,
            tracker_window: self.tracker_window,
            obstacle_jitter: self.obstacle_jitter_m,
            clearance_search: self.clearance_search_m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub x: f64,
    pub y: f64,
    pub radius_m: f64,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
}

/// A scenario file as written on disk, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Occupancy-grid map, relative to the scenario file's directory.
    pub map: PathBuf,
    pub start: StartSpec,
    pub goal: GoalSpec,
    pub goal_tolerance_m: f64,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    pub controller: ControllerKind,
    pub seed: u64,
    /// Seed count used by `compare` when none is given on the command line.
    pub seeds: usize,
    pub vehicle: VehicleBlock,
    pub planner: PlannerBlock,
    pub mpc: MpcBlock,
    pub pursuit: PursuitBlock,
    pub fusion: FusionBlock,
    pub sim: SimBlock,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut base = serde_json::to_value(defaults()).expect("defaults serialize");
        if let Value::Object(m) = &mut base {
            m.remove("version");
        }
        merge_over_defaults(text, base, "scenario")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read scenario {}: {e}", path.display())))?;
        let mut sc = Self::parse(&text)?;
        if sc.map.is_relative() {
            if let Some(dir) = path.parent() {
                sc.map = dir.join(&sc.map);
            }
        }
        Ok(sc)
    }

    /// Builds the engine scenario for one controller and seed, loading the map.
    pub fn to_scenario(&self, controller: ControllerKind, seed: u64) -> Result<Scenario, CliError> {
        let grid = load_grid(&self.map)
            .map_err(|e| CliError::input(format!("map {}: {e}", self.map.display())))?;
        let obstacles = self
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| {
                Obstacle::new(Point::new(o.x, o.y), o.radius_m, Point::new(o.vx, o.vy))
                    .map_err(|e| CliError::input(format!("obstacles[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sc = Scenario {
            grid,
            start: VehicleState::new(self.start.x, self.start.y, self.start.theta, self.start.v),
            goal: Point::new(self.goal.x, self.goal.y),
            goal_tolerance: self.goal_tolerance_m,
            obstacles,
            controller,
            vehicle: self.vehicle.to_core(),
            planner: self.planner.to_core(seed),
            mpc: self.mpc.to_core(),
            pursuit: self.pursuit.to_core(),
            fusion: self.fusion.to_core(),
            sim: self.sim.to_core(),
            seed,
        };
        sc.validate().map_err(|e| CliError::input(format!("scenario: {e}")))?;
        Ok(sc)
    }
}
