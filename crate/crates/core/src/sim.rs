//! Deterministic closed-loop scenario engine.
//!
//! A run plans the global path once, then ticks: observe, run the selected local
//! controller, propagate the vehicle, move the dynamic obstacles, record traces.
//! It stops on goal, collision or after `max_steps`.

use crate::error::{Error, Result};
use crate::fusion::{fuse_states, FusionConfig, MiReport};
use crate::geometry::{normalize_angle, polyline_length, Point};
use crate::gridmap::{clearance, is_free_point, is_free_trajectory, Obstacle, OccupancyGrid};
use crate::mpc::{select_best_control, MpcConfig};
use crate::planner::{plan, PlanResult, PlannerConfig};
use crate::pursuit::{pursuit_step, PursuitConfig};
use crate::reference::{reference_window, PathTracker, ReferencePath};
use crate::vehicle::{
    predict_trajectory, propagate, ControlInput, Trajectory, VehicleParams, VehicleState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    MpcBasic,
    Pursuit,
    InfoFusion,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [
        ControllerKind::MpcBasic,
        ControllerKind::Pursuit,
        ControllerKind::InfoFusion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::MpcBasic => "mpc-basic",
            ControllerKind::Pursuit => "pursuit",
            ControllerKind::InfoFusion => "info-fusion",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "mpc-basic" | "mpc" => Ok(ControllerKind::MpcBasic),
            "pursuit" | "pure-pursuit" => Ok(ControllerKind::Pursuit),
            "info-fusion" | "infofusion" => Ok(ControllerKind::InfoFusion),
            other => Err(Error::InvalidConfig(format!("unknown controller {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Tick length [s].
    pub dt: f64,
    pub max_steps: usize,
    /// Speed used to time-parameterize the reference path [m/s].
    pub cruise_speed: f64,
    /// Maximum spacing of the densified reference path [m].
    pub path_spacing: f64,
    /// Forward search window for path progress [points].
    pub tracker_window: usize,
    /// Each dynamic obstacle starts shifted along its velocity by a seeded
    /// uniform offset in `[-jitter, jitter]` [m].
    pub obstacle_jitter: f64,
    /// Occupied cells beyond this distance are ignored by clearance metrics [m].
    pub clearance_search: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            max_steps: 2000,
            cruise_speed: 3.0,
            path_spacing: 0.5,
            tracker_window: 40,
            obstacle_jitter: 0.0,
            clearance_search: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: OccupancyGrid,
    pub start: VehicleState,
    pub goal: Point,
    pub goal_tolerance: f64,
    /// Static (zero velocity) and dynamic obstacles at t = 0.
    pub obstacles: Vec<Obstacle>,
    pub controller: ControllerKind,
    pub vehicle: VehicleParams,
    pub planner: PlannerConfig,
    pub mpc: MpcConfig,
    pub pursuit: PursuitConfig,
    pub fusion: FusionConfig,
    pub sim: SimConfig,
    pub seed: u64,
}

impl Scenario {
    pub fn static_obstacles(&self) -> Vec<Obstacle> {
        self.obstacles.iter().filter(|o| !o.is_dynamic()).copied().collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        self.planner.validate()?;
        self.mpc.validate()?;
        self.pursuit.validate()?;
        self.fusion.validate()?;
        if !(self.sim.dt > 0.0) {
            return Err(Error::InvalidConfig("sim dt must be > 0".into()));
        }
        if !(self.sim.cruise_speed > 0.0 && self.sim.path_spacing > 0.0) {
            return Err(Error::InvalidConfig("sim cruise_speed and path_spacing must be > 0".into()));
        }
        if !(self.goal_tolerance > 0.0) {
            return Err(Error::InvalidConfig("goal_tolerance must be > 0".into()));
        }
        if self.controller == ControllerKind::InfoFusion
            && (self.mpc.horizon != self.pursuit.horizon || self.mpc.dt != self.pursuit.dt)
        {
            return Err(Error::InvalidConfig(
                "info-fusion needs equal mpc and pursuit horizon and dt".into(),
            ));
        }
        let r = self.vehicle.footprint_radius;
        if !is_free_point(&self.grid, self.start.position(), &self.obstacles, r) {
            return Err(Error::InvalidEndpoint {
                which: "start",
                x: self.start.x,
                y: self.start.y,
            });
        }
        if !is_free_point(&self.grid, self.goal, &self.static_obstacles(), r) {
            return Err(Error::InvalidEndpoint {
                which: "goal",
                x: self.goal.x,
                y: self.goal.y,
            });
        }
        Ok(())
    }

    /// Obstacles at t = 0 after the seeded start-position jitter.
    pub fn initial_obstacles(&self) -> Vec<Obstacle> {
        if self.sim.obstacle_jitter <= 0.0 {
            return self.obstacles.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_0b57);
        self.obstacles
            .iter()
            .map(|o| {
                if !o.is_dynamic() {
                    return *o;
                }
                let shift = rng.gen_range(-self.sim.obstacle_jitter..=self.sim.obstacle_jitter);
                let dir = o.velocity * (1.0 / o.velocity.norm());
                Obstacle {
                    center: o.center + dir * shift,
                    ..*o
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    GoalReached,
    Collision,
    Timeout,
    PlanningFailed,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::GoalReached => "goal-reached",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
            Outcome::PlanningFailed => "planning-failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlRecord {
    pub step: usize,
    pub t: f64,
    pub a: f64,
    pub delta: f64,
}

/// Which control the info-fusion controller actuated on a tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionAction {
    /// Control recovered from the fused next state.
    Fused,
    /// Fused control's rollout collided; the MPC control was used.
    MpcFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiRecord {
    pub step: usize,
    pub report: MiReport,
    pub pursuit_next: VehicleState,
    pub mpc_next: VehicleState,
    pub fused_next: VehicleState,
    pub action: FusionAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub controller: ControllerKind,
    pub seed: u64,
    pub outcome: Outcome,
    pub steps_used: usize,
    pub elapsed_sim_time: f64,
    pub trajectory: Trajectory,
    pub controls: Vec<ControlRecord>,
    pub mi_trace: Vec<MiRecord>,
    /// Clearance of every trajectory state.
    pub clearances: Vec<f64>,
    pub min_clearance: f64,
    pub path_length: f64,
    /// Global plan; `None` when planning failed.
    pub plan: Option<PlanResult>,
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct World<'a> {
    pub scenario: &'a Scenario,
    pub path: ReferencePath,
    pub tracker: PathTracker,
    pub vehicle: VehicleState,
    pub obstacles: Vec<Obstacle>,
    pub step: usize,
    pub trajectory: Vec<VehicleState>,
    pub controls: Vec<ControlRecord>,
    pub mi_trace: Vec<MiRecord>,
}

impl<'a> World<'a> {
    pub fn new(scenario: &'a Scenario, waypoints: &[Point]) -> Self {
        let path = ReferencePath::from_waypoints(waypoints, scenario.sim.path_spacing);
        let mut tracker = PathTracker::new(scenario.sim.tracker_window);
        tracker.update(&path, scenario.start.position());
        Self {
            scenario,
            path,
            tracker,
            vehicle: scenario.start,
            obstacles: scenario.initial_obstacles(),
            step: 0,
            trajectory: vec![scenario.start],
            controls: Vec::new(),
            mi_trace: Vec::new(),
        }
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.scenario.sim.dt
    }

    pub fn at_goal(&self) -> bool {
        self.vehicle.position().dist(self.scenario.goal) <= self.scenario.goal_tolerance
    }

    pub fn is_colliding(&self) -> bool {
        !is_free_point(
            &self.scenario.grid,
            self.vehicle.position(),
            &self.obstacles,
            self.scenario.vehicle.footprint_radius,
        )
    }

    pub fn clearance(&self) -> f64 {
        clearance(
            &self.scenario.grid,
            self.vehicle.position(),
            &self.obstacles,
            self.scenario.vehicle.footprint_radius,
            self.scenario.sim.clearance_search,
        )
    }
}

/// Control that moves `s` onto `target`'s speed and heading in one step of `dt`
/// under the bicycle model, clamped to the admissible box.
pub fn inverse_kinematics(
    s: &VehicleState,
    target: &VehicleState,
    dt: f64,
    params: &VehicleParams,
) -> ControlInput {
    let a = (target.v - s.v) / dt;
    let dtheta = normalize_angle(target.theta - s.theta);
    let delta = if s.v > 0.0 {
        (dtheta * params.wheelbase / (s.v * dt)).atan()
    } else {
        0.0
    };
    ControlInput::new(a, delta)
}

/// Advances an obstacle by `dt`, reflecting its velocity off the map boundary.
pub fn advance_obstacle(o: &Obstacle, dt: f64, grid: &OccupancyGrid) -> Obstacle {
    let ext = grid.extent();
    let mut c = o.center + o.velocity * dt;
    let mut v = o.velocity;
    if c.x - o.radius < ext.min.x && v.x < 0.0 {
        c.x = 2.0 * (ext.min.x + o.radius) - c.x;
        v.x = -v.x;
    } else if c.x + o.radius > ext.max.x && v.x > 0.0 {
        c.x = 2.0 * (ext.max.x - o.radius) - c.x;
        v.x = -v.x;
    }
    if c.y - o.radius < ext.min.y && v.y < 0.0 {
        c.y = 2.0 * (ext.min.y + o.radius) - c.y;
        v.y = -v.y;
    } else if c.y + o.radius > ext.max.y && v.y > 0.0 {
        c.y = 2.0 * (ext.max.y - o.radius) - c.y;
        v.y = -v.y;
    }
    Obstacle {
        center: c,
        velocity: v,
        radius: o.radius,
    }
}

fn select_control(world: &mut World<'_>) -> ControlInput {
    let sc = world.scenario;
    let s = world.vehicle;
    if world.at_goal() {
        return ControlInput::brake();
    }
    let progress = world.tracker.update(&world.path, s.position());
    let remaining = &world.path.points()[progress..];
    let mpc_decision = || {
        let reference =
            reference_window(&world.path, progress, &s, sc.mpc.horizon, sc.mpc.dt, sc.sim.cruise_speed);
        select_best_control(&s, &reference, &sc.grid, &world.obstacles, &sc.mpc, &sc.vehicle)
    };
    let pursuit_decision =
        || pursuit_step(&s, remaining, &world.obstacles, &sc.grid, &sc.pursuit, &sc.vehicle);

    match sc.controller {
        ControllerKind::MpcBasic => mpc_decision().control,
        ControllerKind::Pursuit => pursuit_decision().control,
        ControllerKind::InfoFusion => {
            let m = mpc_decision();
            let p = pursuit_decision();
            match (p.feasible, m.feasible) {
                (true, true) => {
                    let (fused, report) = fuse_states(&p.predicted, &m.predicted, &sc.fusion)
                        .expect("controllers share horizon and dt");
                    debug_assert_eq!(fused.first(), &s);
                    let fused_next = fused.states()[1];
                    let mut control = inverse_kinematics(&s, &fused_next, sc.mpc.dt, &sc.vehicle);
                    let rollout = predict_trajectory(&s, &control, sc.mpc.horizon, sc.mpc.dt, &sc.vehicle);
                    let action = if is_free_trajectory(
                        &sc.grid,
                        &rollout,
                        &world.obstacles,
                        sc.vehicle.footprint_radius,
                    ) {
                        FusionAction::Fused
                    } else {
                        control = m.control;
                        FusionAction::MpcFallback
                    };
                    world.mi_trace.push(MiRecord {
                        step: world.step,
                        report,
                        pursuit_next: p.predicted.states()[1],
                        mpc_next: m.predicted.states()[1],
                        fused_next,
                        action,
                    });
                    control
                }
                (true, false) => p.control,
                (false, _) => m.control,
            }
        }
    }
}

/// One tick of the closed loop.
pub fn step_world(world: &mut World<'_>) {
    let sc = world.scenario;
    let control = select_control(world);
    world.controls.push(ControlRecord {
        step: world.step,
        t: world.time(),
        a: control.a(),
        delta: control.delta(),
    });
    world.vehicle = propagate(&world.vehicle, &control, sc.sim.dt, &sc.vehicle);
    world.obstacles = world
        .obstacles
        .iter()
        .map(|o| advance_obstacle(o, sc.sim.dt, &sc.grid))
        .collect();
    world.step += 1;
    world.trajectory.push(world.vehicle);
}

fn finish(world: World<'_>, outcome: Outcome, clearances: Vec<f64>, plan: PlanResult) -> RunResult {
    let sc = world.scenario;
    let positions: Vec<Point> = world.trajectory.iter().map(|s| s.position()).collect();
    RunResult {
        controller: sc.controller,
        seed: sc.seed,
        outcome,
        steps_used: world.step,
        elapsed_sim_time: world.step as f64 * sc.sim.dt,
        path_length: polyline_length(&positions),
        trajectory: Trajectory::new(world.trajectory, sc.sim.dt).expect("trajectory starts non-empty"),
        controls: world.controls,
        mi_trace: world.mi_trace,
        min_clearance: clearances.iter().copied().fold(f64::INFINITY, f64::min),
        clearances,
        plan: Some(plan),
    }
}

/// Plans once and runs the closed loop to a terminal outcome.
pub fn run_scenario(sc: &Scenario) -> Result<RunResult> {
    sc.validate()?;
    let planner_cfg = PlannerConfig {
        rng_seed: sc.seed,
        ..sc.planner
    };
    let plan_result = match plan(
        &sc.grid,
        &sc.static_obstacles(),
        sc.start.position(),
        sc.goal,
        &planner_cfg,
    ) {
        Ok(p) => p,
        Err(Error::PlanningFailed { .. }) => {
            let start = sc.start;
            let c0 = clearance(
                &sc.grid,
                start.position(),
                &sc.initial_obstacles(),
                sc.vehicle.footprint_radius,
                sc.sim.clearance_search,
            );
            return Ok(RunResult {
                controller: sc.controller,
                seed: sc.seed,
                outcome: Outcome::PlanningFailed,
                steps_used: 0,
                elapsed_sim_time: 0.0,
                trajectory: Trajectory::new(vec![start], sc.sim.dt)?,
                controls: Vec::new(),
                mi_trace: Vec::new(),
                clearances: vec![c0],
                min_clearance: c0,
                path_length: 0.0,
                plan: None,
            });
        }
        Err(e) => return Err(e),
    };

    let mut world = World::new(sc, &plan_result.path);
    let mut clearances = vec![world.clearance()];
    loop {
        if world.at_goal() {
            return Ok(finish(world, Outcome::GoalReached, clearances, plan_result));
        }
        if world.step >= sc.sim.max_steps {
            return Ok(finish(world, Outcome::Timeout, clearances, plan_result));
        }
        step_world(&mut world);
        clearances.push(world.clearance());
        if world.is_colliding() {
            return Ok(finish(world, Outcome::Collision, clearances, plan_result));
        }
    }
}
