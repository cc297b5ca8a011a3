//! CSV traces and JSON run summaries.

use crate::config::{Defaults, ScenarioFile};
use crate::CliError;
use infofusion_core::fusion::StateDim;
use infofusion_core::metrics::MetricSummary;
use infofusion_core::sim::RunResult;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const CONTROLS_CSV: &str = "controls.csv";
pub const MI_CSV: &str = "mi.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const COMPARISON_CSV: &str = "comparison.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub tool_version: String,
    /// Seconds since the Unix epoch when the artifact was written.
    pub timestamp: u64,
    pub defaults: Defaults,
    pub scenario: ScenarioFile,
    pub result: RunResult,
    pub metrics: MetricSummary,
    /// Wall-clock time spent inside the run [s].
    pub compute_time_s: f64,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::io(format!("{}: {e}", path.display()))
}

fn write_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn trajectory_rows(r: &RunResult) -> impl Iterator<Item = Vec<String>> + '_ {
    let dt = r.trajectory.dt();
    r.trajectory.states().iter().enumerate().map(move |(i, s)| {
        vec![
            i.to_string(),
            (i as f64 * dt).to_string(),
            s.x.to_string(),
            s.y.to_string(),
            s.theta.to_string(),
            s.v.to_string(),
        ]
    })
}

pub fn write_trajectory_csv(path: &Path, r: &RunResult) -> Result<(), CliError> {
    write_rows(
        path,
        &["step", "t_s", "x_m", "y_m", "theta_rad", "v_mps"],
        trajectory_rows(r),
    )
}

pub fn write_controls_csv(path: &Path, r: &RunResult) -> Result<(), CliError> {
    write_rows(
        path,
        &["step", "t_s", "a_mps2", "delta_rad"],
        r.controls.iter().map(|c| {
            vec![c.step.to_string(), c.t.to_string(), c.a.to_string(), c.delta.to_string()]
        }),
    )
}

pub fn write_mi_csv(path: &Path, r: &RunResult) -> Result<(), CliError> {
    write_rows(
        path,
        &["step", "dim", "H_p_bits", "H_m_bits", "mi_bits", "nmi", "gated"],
        r.mi_trace.iter().flat_map(|rec| {
            StateDim::ALL.into_iter().map(move |dim| {
                let d = rec.report.get(dim);
                vec![
                    rec.step.to_string(),
                    dim.name().to_string(),
                    d.h_p.to_string(),
                    d.h_m.to_string(),
                    d.mi.to_string(),
                    d.nmi.to_string(),
                    u8::from(d.gated).to_string(),
                ]
            })
        }),
    )
}

pub fn write_summary(path: &Path, a: &RunArtifact) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(a).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

pub fn read_summary(path: &Path) -> Result<RunArtifact, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

/// Writes every per-run file into `dir`; the MI trace only for fusion runs.
pub fn write_run_dir(dir: &Path, a: &RunArtifact) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_trajectory_csv(&dir.join(TRAJECTORY_CSV), &a.result)?;
    write_controls_csv(&dir.join(CONTROLS_CSV), &a.result)?;
    if a.result.controller == infofusion_core::sim::ControllerKind::InfoFusion {
        write_mi_csv(&dir.join(MI_CSV), &a.result)?;
    }
    write_summary(&dir.join(SUMMARY_JSON), a)
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub controller: String,
    pub runs: usize,
    pub successes: usize,
    /// Median completion time over successful runs; NaN when none succeeded.
    pub median_time_s: f64,
    pub median_min_clearance_m: f64,
    /// Median over runs of the per-run acceleration variance.
    pub accel_var: f64,
    pub steer_var: f64,
    /// Median over runs of the per-run acceleration sign-flip count.
    pub accel_sign_flips: f64,
    /// Median completion time relative to mpc-basic's; NaN when either is missing.
    pub time_ratio_vs_mpc_basic: f64,
}

pub fn write_comparison_csv(path: &Path, rows: &[ComparisonRow]) -> Result<(), CliError> {
    write_rows(
        path,
        &[
            "controller",
            "runs",
            "successes",
            "median_time_s",
            "median_min_clearance_m",
            "accel_var",
            "steer_var",
            "accel_sign_flips",
            "time_ratio_vs_mpc_basic",
        ],
        rows.iter().map(|r| {
            vec![
                r.controller.clone(),
                r.runs.to_string(),
                r.successes.to_string(),
                r.median_time_s.to_string(),
                r.median_min_clearance_m.to_string(),
                r.accel_var.to_string(),
                r.steer_var.to_string(),
                r.accel_sign_flips.to_string(),
                r.time_ratio_vs_mpc_basic.to_string(),
            ]
        }),
    )
}
