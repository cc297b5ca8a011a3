//! Standalone SVG plots: trajectory overlay and control traces.

use crate::CliError;
use infofusion_core::sim::RunResult;
use infofusion_core::{Obstacle, OccupancyGrid};
use plotters::prelude::*;
use std::path::Path;

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

fn plot_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::io(format!("{}: {e}", path.display()))
}

/// Map, initial obstacles, planned path of the first run, and every run's trajectory.
pub fn trajectory_overlay(
    path: &Path,
    grid: &OccupancyGrid,
    obstacles: &[Obstacle],
    runs: &[(String, &RunResult)],
) -> Result<(), CliError> {
    let ext = grid.extent();
    let root = SVGBackend::new(path, (720, 720)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Trajectories", ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(45)
        .build_cartesian_2d(ext.min.x..ext.max.x, ext.min.y..ext.max.y)
        .map_err(|e| plot_err(path, e))?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc("x [m]")
        .y_desc("y [m]")
        .draw()
        .map_err(|e| plot_err(path, e))?;

    let res = grid.resolution();
    let cells = (0..grid.height()).flat_map(|r| (0..grid.width()).map(move |c| (c, r)));
    chart
        .draw_series(cells.filter(|&(c, r)| grid.is_occupied(c, r)).map(|(c, r)| {
            let x0 = ext.min.x + c as f64 * res;
            let y0 = ext.min.y + r as f64 * res;
            Rectangle::new([(x0, y0), (x0 + res, y0 + res)], BLACK.mix(0.7).filled())
        }))
        .map_err(|e| plot_err(path, e))?;
    chart
        .draw_series(obstacles.iter().map(|o| {
            // Radius in pixels from the x scale.
            let px = chart_px(o.radius, ext.max.x - ext.min.x, 720 - 65);
            Circle::new((o.center.x, o.center.y), px, RGBColor(120, 120, 120).filled())
        }))
        .map_err(|e| plot_err(path, e))?;

    if let Some(plan) = runs.first().and_then(|(_, r)| r.plan.as_ref()) {
        chart
            .draw_series(LineSeries::new(
                plan.path.iter().map(|p| (p.x, p.y)),
                BLACK.stroke_width(1),
            ))
            .map_err(|e| plot_err(path, e))?
            .label("global path")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK));
    }
    for (i, (label, r)) in runs.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(
                r.trajectory.states().iter().map(|s| (s.x, s.y)),
                color.stroke_width(2),
            ))
            .map_err(|e| plot_err(path, e))?
            .label(label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(path, e))?;
    root.present().map_err(|e| plot_err(path, e))
}

fn chart_px(meters: f64, span: f64, pixels: u32) -> u32 {
    ((meters / span) * pixels as f64).round().max(1.0) as u32
}

/// One control channel against time for every run.
pub fn control_trace(
    path: &Path,
    title: &str,
    y_desc: &str,
    runs: &[(String, &RunResult)],
    pick: fn(&infofusion_core::sim::ControlRecord) -> f64,
) -> Result<(), CliError> {
    let t_max = runs
        .iter()
        .filter_map(|(_, r)| r.controls.last().map(|c| c.t))
        .fold(0.0f64, f64::max)
        .max(0.1);
    let (mut lo, mut hi) = runs
        .iter()
        .flat_map(|(_, r)| r.controls.iter().map(pick))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo >= hi {
        lo = lo.min(0.0) - 1.0;
        hi = hi.max(0.0) + 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let root = SVGBackend::new(path, (900, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(55)
        .build_cartesian_2d(0.0..t_max, (lo - pad)..(hi + pad))
        .map_err(|e| plot_err(path, e))?;
    chart
        .configure_mesh()
        .x_desc("t [s]")
        .y_desc(y_desc)
        .draw()
        .map_err(|e| plot_err(path, e))?;
    for (i, (label, r)) in runs.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(
                r.controls.iter().map(|c| (c.t, pick(c))),
                color.stroke_width(1),
            ))
            .map_err(|e| plot_err(path, e))?
            .label(label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(path, e))?;
    root.present().map_err(|e| plot_err(path, e))
}
