//! `plan`, `run` and `compare`.

use crate::artifacts::{
    write_comparison_csv, write_run_dir, ComparisonRow, RunArtifact, COMPARISON_CSV,
};
use crate::config::{defaults, merge_over_defaults, PlannerBlock, ScenarioFile};
use crate::plot::{control_trace, trajectory_overlay};
use crate::{CliError, EXIT_OK, EXIT_PLANNING, EXIT_RUN_FAILED};
use infofusion_core::error::Error;
use infofusion_core::gridmap::load_grid;
use infofusion_core::metrics::{compute_metrics, median};
use infofusion_core::planner::{format_path_export, plan};
use infofusion_core::sim::{run_scenario, ControllerKind, Outcome, RunResult};
use infofusion_core::Point;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Planner settings file for `plan`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfigFile {
    pub planner: PlannerBlock,
    pub seed: u64,
}

impl Default for PlanConfigFile {
    fn default() -> Self {
        Self {
            planner: defaults().planner.clone(),
            seed: defaults().seed,
        }
    }
}

impl PlanConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let base = serde_json::to_value(Self::default()).expect("defaults serialize");
        merge_over_defaults(text, base, "config")
    }
}

pub fn outcome_exit_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::GoalReached => EXIT_OK,
        Outcome::PlanningFailed => EXIT_PLANNING,
        Outcome::Collision | Outcome::Timeout => EXIT_RUN_FAILED,
    }
}

/// Parses `"x,y"`.
pub fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected \"x,y\", got {s:?}"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad coordinate {v:?}: {e}"))
    };
    Ok(Point::new(parse(x)?, parse(y)?))
}

pub fn cmd_plan(
    map: &Path,
    start: Point,
    goal: Point,
    config: Option<&Path>,
    out: &Path,
) -> Result<u8, CliError> {
    let grid = load_grid(map).map_err(|e| CliError::input(format!("map {}: {e}", map.display())))?;
    let cfg = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::input(format!("cannot read config {}: {e}", p.display())))?;
            PlanConfigFile::parse(&text)
                .map_err(|e| CliError::input(format!("{}: {}", p.display(), e.message)))?
        }
        None => PlanConfigFile::default(),
    };
    match plan(&grid, &[], start, goal, &cfg.planner.to_core(cfg.seed)) {
        Ok(result) => {
            std::fs::write(out, format_path_export(&result))
                .map_err(|e| CliError::io(format!("{}: {e}", out.display())))?;
            eprintln!(
                "planned {} waypoints, cost {:.3} m -> {}",
                result.path.len(),
                result.cost,
                out.display()
            );
            Ok(EXIT_OK)
        }
        Err(Error::PlanningFailed { iterations }) => {
            eprintln!("no path found after {iterations} iterations");
            Ok(EXIT_PLANNING)
        }
        Err(Error::InvalidEndpoint { which, x, y }) => Err(CliError::input(format!(
            "{which} ({x}, {y}) is not collision-free on {}",
            map.display()
        ))),
        Err(e) => Err(CliError::input(e.to_string())),
    }
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Runs one (controller, seed) pair of a scenario file.
pub fn execute(file: &ScenarioFile, controller: ControllerKind, seed: u64) -> Result<RunArtifact, CliError> {
    let sc = file.to_scenario(controller, seed)?;
    let t0 = Instant::now();
    let result = run_scenario(&sc).map_err(|e| CliError::input(format!("scenario: {e}")))?;
    let compute_time_s = t0.elapsed().as_secs_f64();
    let mut echo = file.clone();
    echo.controller = controller;
    echo.seed = seed;
    Ok(RunArtifact {
        tool_version: TOOL_VERSION.to_string(),
        timestamp: now_unix(),
        defaults: defaults().clone(),
        scenario: echo,
        metrics: compute_metrics(&result),
        result,
        compute_time_s,
    })
}

pub fn cmd_run(
    scenario: &Path,
    out_dir: &Path,
    controller: Option<ControllerKind>,
    seed: Option<u64>,
) -> Result<u8, CliError> {
    let file = ScenarioFile::load(scenario)?;
    let controller = controller.unwrap_or(file.controller);
    let seed = seed.unwrap_or(file.seed);
    let artifact = execute(&file, controller, seed)?;
    write_run_dir(out_dir, &artifact)?;
    let m = &artifact.metrics;
    eprintln!(
        "{controller} seed {seed}: {} after {} steps ({:.1} s simulated), path {:.2} m, min clearance {:.3} m",
        m.outcome.name(),
        artifact.result.steps_used,
        m.elapsed_sim_time,
        m.path_length,
        m.min_clearance
    );
    Ok(outcome_exit_code(artifact.result.outcome))
}

/// Runs every (controller, seed) pair, fanning out across threads. Output
/// order follows `controllers`, then seed.
pub fn run_matrix(
    file: &ScenarioFile,
    controllers: &[ControllerKind],
    seeds: usize,
) -> Result<Vec<RunArtifact>, CliError> {
    if controllers.is_empty() || seeds == 0 {
        return Err(CliError::input("compare needs at least one controller and one seed"));
    }
    // Surface scenario errors once, before the fan-out.
    file.to_scenario(controllers[0], file.seed)?;
    let pairs: Vec<(ControllerKind, u64)> = controllers
        .iter()
        .flat_map(|&k| (0..seeds as u64).map(move |i| (k, file.seed + i)))
        .collect();
    pairs
        .par_iter()
        .map(|&(k, seed)| execute(file, k, seed))
        .collect()
}

fn finite_or_nan(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Aggregates artifacts into one table row per controller, in first-seen order.
pub fn comparison_rows(artifacts: &[RunArtifact]) -> Vec<ComparisonRow> {
    let mut order: Vec<ControllerKind> = Vec::new();
    for a in artifacts {
        if !order.contains(&a.result.controller) {
            order.push(a.result.controller);
        }
    }
    let mut rows: Vec<ComparisonRow> = order
        .iter()
        .map(|&k| {
            let runs: Vec<&RunArtifact> = artifacts.iter().filter(|a| a.result.controller == k).collect();
            let times: Vec<f64> = runs.iter().filter_map(|a| a.metrics.completion_time).collect();
            let col = |f: fn(&RunArtifact) -> f64| -> f64 {
                finite_or_nan(median(&runs.iter().map(|a| f(a)).collect::<Vec<_>>()))
            };
            ComparisonRow {
                controller: k.name().to_string(),
                runs: runs.len(),
                successes: times.len(),
                median_time_s: finite_or_nan(median(&times)),
                median_min_clearance_m: col(|a| a.metrics.min_clearance),
                accel_var: col(|a| a.metrics.accel_variance),
                steer_var: col(|a| a.metrics.steer_variance),
                accel_sign_flips: col(|a| a.metrics.accel_sign_flips as f64),
                time_ratio_vs_mpc_basic: f64::NAN,
            }
        })
        .collect();
    let baseline = rows
        .iter()
        .find(|r| r.controller == ControllerKind::MpcBasic.name())
        .map(|r| r.median_time_s);
    if let Some(b) = baseline {
        for r in &mut rows {
            r.time_ratio_vs_mpc_basic = r.median_time_s / b;
        }
    }
    rows
}

pub fn run_dir(out_dir: &Path, controller: ControllerKind, seed: u64) -> PathBuf {
    out_dir.join("runs").join(controller.name()).join(format!("seed_{seed}"))
}

pub fn cmd_compare(
    scenario: &Path,
    controllers: &[ControllerKind],
    seeds: Option<usize>,
    out_dir: &Path,
) -> Result<u8, CliError> {
    let file = ScenarioFile::load(scenario)?;
    let seeds = seeds.unwrap_or(file.seeds);
    let artifacts = run_matrix(&file, controllers, seeds)?;
    for a in &artifacts {
        write_run_dir(&run_dir(out_dir, a.result.controller, a.result.seed), a)?;
    }
    let rows = comparison_rows(&artifacts);
    write_comparison_csv(&out_dir.join(COMPARISON_CSV), &rows)?;

    // Overlay plots use each controller's first seed.
    let first: Vec<(String, &RunResult)> = controllers
        .iter()
        .filter_map(|&k| {
            artifacts
                .iter()
                .find(|a| a.result.controller == k)
                .map(|a| (k.name().to_string(), &a.result))
        })
        .collect();
    let sc = file.to_scenario(controllers[0], file.seed)?;
    trajectory_overlay(&out_dir.join("trajectories.svg"), &sc.grid, &sc.initial_obstacles(), &first)?;
    control_trace(&out_dir.join("acceleration.svg"), "Acceleration", "a [m/s^2]", &first, |c| c.a)?;
    control_trace(&out_dir.join("steering.svg"), "Steering angle", "delta [rad]", &first, |c| c.delta)?;

    println!(
        "{:<12} {:>5} {:>9} {:>10} {:>12} {:>10} {:>10} {:>7} {:>7}",
        "controller", "runs", "successes", "time_s", "clearance_m", "accel_var", "steer_var", "flips", "ratio"
    );
    for r in &rows {
        println!(
            "{:<12} {:>5} {:>9} {:>10.2} {:>12.3} {:>10.4} {:>10.4} {:>7.1} {:>7.3}",
            r.controller,
            r.runs,
            r.successes,
            r.median_time_s,
            r.median_min_clearance_m,
            r.accel_var,
            r.steer_var,
            r.accel_sign_flips,
            r.time_ratio_vs_mpc_basic
        );
    }
    Ok(EXIT_OK)
}
