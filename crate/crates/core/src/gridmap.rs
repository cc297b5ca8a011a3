//! Occupancy grids, disc obstacles and collision queries.
//!
//! All collision queries treat the vehicle as a disc of a given radius. A disc
//! collides when it strictly overlaps an occupied cell or an obstacle disc, or
//! when it leaves the map extent. Tangency is free.

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Point};
use crate::vehicle::Trajectory;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Binary raster map. Cell `(0, 0)` is the minimum-x, minimum-y cell.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Point,
    cells: Vec<bool>,
}

/// Axis-aligned world bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub min: Point,
    pub max: Point,
}

impl Extent {
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

impl OccupancyGrid {
    /// Builds a grid from row-major occupancy, row 0 being the minimum-y row.
    pub fn new(width: usize, height: usize, resolution: f64, cells: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parse {
                line: 0,
                message: "grid width and height must be positive".into(),
            });
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::Parse {
                line: 0,
                message: format!("resolution must be positive, got {resolution}"),
            });
        }
        if cells.len() != width * height {
            return Err(Error::Dimension {
                line: 0,
                expected: width * height,
                found: cells.len(),
            });
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin: Point::new(0.0, 0.0),
            cells,
        })
    }

    pub fn empty(width: usize, height: usize, resolution: f64) -> Result<Self> {
        Self::new(width, height, resolution, vec![false; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn extent(&self) -> Extent {
        Extent {
            min: self.origin,
            max: Point::new(
                self.origin.x + self.width as f64 * self.resolution,
                self.origin.y + self.height as f64 * self.resolution,
            ),
        }
    }

    pub fn is_occupied(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub fn set_occupied(&mut self, col: usize, row: usize, occupied: bool) {
        self.cells[row * self.width + col] = occupied;
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Cell containing `p`, or `None` outside the extent.
    pub fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        let cx = ((p.x - self.origin.x) / self.resolution).floor();
        let cy = ((p.y - self.origin.y) / self.resolution).floor();
        if cx < 0.0 || cy < 0.0 || cx >= self.width as f64 || cy >= self.height as f64 {
            return None;
        }
        Some((cx as usize, cy as usize))
    }

    fn cell_bounds(&self, col: usize, row: usize) -> (Point, Point) {
        let min = Point::new(
            self.origin.x + col as f64 * self.resolution,
            self.origin.y + row as f64 * self.resolution,
        );
        (min, Point::new(min.x + self.resolution, min.y + self.resolution))
    }

    /// Inclusive cell index ranges touched by the box `[lo, hi]`, clipped to the grid.
    fn cell_range(&self, lo: Point, hi: Point) -> Option<((usize, usize), (usize, usize))> {
        let c0 = ((lo.x - self.origin.x) / self.resolution).floor();
        let c1 = ((hi.x - self.origin.x) / self.resolution).floor();
        let r0 = ((lo.y - self.origin.y) / self.resolution).floor();
        let r1 = ((hi.y - self.origin.y) / self.resolution).floor();
        if c1 < 0.0 || r1 < 0.0 || c0 >= self.width as f64 || r0 >= self.height as f64 {
            return None;
        }
        let clip = |v: f64, n: usize| v.max(0.0).min((n - 1) as f64) as usize;
        Some((
            (clip(c0, self.width), clip(c1, self.width)),
            (clip(r0, self.height), clip(r1, self.height)),
        ))
    }

    /// Iterates the occupied cells overlapping the box `[lo, hi]`.
    fn occupied_in_box(&self, lo: Point, hi: Point) -> impl Iterator<Item = (Point, Point)> + '_ {
        let range = self.cell_range(lo, hi);
        let (cols, rows) = match range {
            Some(((c0, c1), (r0, r1))) => ((c0, c1 + 1), (r0, r1 + 1)),
            None => ((0, 0), (0, 0)),
        };
        (rows.0..rows.1).flat_map(move |r| {
            (cols.0..cols.1)
                .filter(move |&c| self.is_occupied(c, r))
                .map(move |c| self.cell_bounds(c, r))
        })
    }

    /// Distance from `p` to the nearest occupied cell, searching at most `max_range`.
    /// Returns `max_range` when nothing is found within it.
    pub fn nearest_occupied_distance(&self, p: Point, max_range: f64) -> f64 {
        let lo = Point::new(p.x - max_range, p.y - max_range);
        let hi = Point::new(p.x + max_range, p.y + max_range);
        self.occupied_in_box(lo, hi)
            .map(|(min, max)| point_rect_distance(p, min, max))
            .fold(max_range, f64::min)
    }
}

/// Distance from `p` to the closed rectangle `[min, max]` (zero inside).
pub fn point_rect_distance(p: Point, min: Point, max: Point) -> f64 {
    let dx = (min.x - p.x).max(0.0).max(p.x - max.x);
    let dy = (min.y - p.y).max(0.0).max(p.y - max.y);
    dx.hypot(dy)
}

/// Distance from segment `[a, b]` to the closed rectangle `[min, max]`.
pub fn segment_rect_distance(a: Point, b: Point, min: Point, max: Point) -> f64 {
    if segment_intersects_rect(a, b, min, max) {
        return 0.0;
    }
    let corners = [
        min,
        Point::new(max.x, min.y),
        max,
        Point::new(min.x, max.y),
    ];
    let from_ends = point_rect_distance(a, min, max).min(point_rect_distance(b, min, max));
    corners
        .iter()
        .map(|&c| point_segment_distance(c, a, b))
        .fold(from_ends, f64::min)
}

/// Liang–Barsky clip test against a closed rectangle.
fn segment_intersects_rect(a: Point, b: Point, min: Point, max: Point) -> bool {
    let d = b - a;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-d.x, a.x - min.x),
        (d.x, max.x - a.x),
        (-d.y, a.y - min.y),
        (d.y, max.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Disc obstacle; `velocity` is zero for static obstacles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Point,
    pub radius: f64,
    pub velocity: Point,
}

impl Obstacle {
    pub fn new(center: Point, radius: f64, velocity: Point) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidConfig(format!("obstacle radius must be > 0, got {radius}")));
        }
        Ok(Self {
            center,
            radius,
            velocity,
        })
    }

    pub fn fixed(center: Point, radius: f64) -> Result<Self> {
        Self::new(center, radius, Point::default())
    }

    pub fn is_dynamic(&self) -> bool {
        self.velocity != Point::default()
    }

    /// Constant-velocity extrapolation `t` seconds ahead.
    pub fn at_time(&self, t: f64) -> Obstacle {
        Obstacle {
            center: self.center + self.velocity * t,
            ..*self
        }
    }
}

/// Environment snapshot at one control tick.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub grid: &'a OccupancyGrid,
    pub obstacles: &'a [Obstacle],
}

/// Parses the text map format: `width height resolution` followed by `height`
/// rows of `#`/`.`, first row at minimum y. `;` comments and blank lines may
/// precede the header.
pub fn parse_grid(text: &str) -> Result<OccupancyGrid> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (header_line, header) = loop {
        match lines.next() {
            Some((n, l)) => {
                let t = l.trim();
                if t.is_empty() || t.starts_with(';') {
                    continue;
                }
                break (n, t);
            }
            None => {
                return Err(Error::Parse {
                    line: 0,
                    message: "missing header".into(),
                })
            }
        }
    };
    let parse_err = |message: String| Error::Parse {
        line: header_line,
        message,
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_err(format!(
            "header must be `width height resolution`, got {header:?}"
        )));
    }
    let width: usize = fields[0]
        .parse()
        .map_err(|_| parse_err(format!("invalid width {:?}", fields[0])))?;
    let height: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(format!("invalid height {:?}", fields[1])))?;
    let resolution: f64 = fields[2]
        .parse()
        .map_err(|_| parse_err(format!("invalid resolution {:?}", fields[2])))?;
    if width == 0 || height == 0 {
        return Err(parse_err("width and height must be positive".into()));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(parse_err(format!("resolution must be positive, got {resolution}")));
    }

    let mut cells = Vec::with_capacity(width * height);
    let mut rows = 0;
    for (n, line) in lines {
        let line = line.trim_end_matches('\r');
        if rows == height {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::Dimension {
                line: n,
                expected: width * height,
                found: width * height + line.len(),
            });
        }
        if line.chars().count() != width {
            return Err(Error::Dimension {
                line: n,
                expected: width,
                found: line.chars().count(),
            });
        }
        for ch in line.chars() {
            match ch {
                '#' => cells.push(true),
                '.' => cells.push(false),
                other => {
                    return Err(Error::Parse {
                        line: n,
                        message: format!("unexpected cell character {other:?}"),
                    })
                }
            }
        }
        rows += 1;
    }
    if rows != height {
        return Err(Error::Dimension {
            line: header_line + rows + 1,
            expected: width * height,
            found: cells.len(),
        });
    }
    OccupancyGrid::new(width, height, resolution, cells)
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<OccupancyGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_grid(&text)
}

/// Serializes a grid back to the text map format.
pub fn format_grid(grid: &OccupancyGrid) -> String {
    let mut out = format!("{} {} {}\n", grid.width, grid.height, grid.resolution);
    for row in 0..grid.height {
        for col in 0..grid.width {
            out.push(if grid.is_occupied(col, row) { '#' } else { '.' });
        }
        out.push('\n');
    }
    out
}

/// True when the disc of `radius` around `p` stays inside the extent and overlaps
/// no occupied cell and no obstacle.
pub fn is_free_point(grid: &OccupancyGrid, p: Point, obstacles: &[Obstacle], radius: f64) -> bool {
    let ext = grid.extent();
    if p.x - radius < ext.min.x
        || p.x + radius > ext.max.x
        || p.y - radius < ext.min.y
        || p.y + radius > ext.max.y
    {
        return false;
    }
    let lo = Point::new(p.x - radius, p.y - radius);
    let hi = Point::new(p.x + radius, p.y + radius);
    for (min, max) in grid.occupied_in_box(lo, hi) {
        let d = point_rect_distance(p, min, max);
        if d < radius || d == 0.0 {
            return false;
        }
    }
    obstacles
        .iter()
        .all(|o| p.dist(o.center) >= o.radius + radius)
}

/// Swept-disc test over the whole segment `[p1, p2]`.
///
/// Every point of the segment is checked (not only samples), so the result is
/// at least as strict as sampling at any spacing and is symmetric in its endpoints.
pub fn is_free_segment(
    grid: &OccupancyGrid,
    p1: Point,
    p2: Point,
    obstacles: &[Obstacle],
    radius: f64,
) -> bool {
    // Canonical endpoint order keeps the floating-point evaluation symmetric.
    let (p1, p2) = if (p1.x, p1.y) <= (p2.x, p2.y) { (p1, p2) } else { (p2, p1) };
    // The extent is convex, so both end discs inside implies the capsule is inside.
    if !is_free_point(grid, p1, &[], radius) || !is_free_point(grid, p2, &[], radius) {
        return false;
    }
    let lo = Point::new(p1.x.min(p2.x) - radius, p1.y.min(p2.y) - radius);
    let hi = Point::new(p1.x.max(p2.x) + radius, p1.y.max(p2.y) + radius);
    for (min, max) in grid.occupied_in_box(lo, hi) {
        let d = segment_rect_distance(p1, p2, min, max);
        if d < radius || d == 0.0 {
            return false;
        }
    }
    obstacles
        .iter()
        .all(|o| point_segment_distance(o.center, p1, p2) >= o.radius + radius)
}

/// Checks every state of `traj`, advancing each obstacle to the state's timestamp.
pub fn is_free_trajectory(
    grid: &OccupancyGrid,
    traj: &Trajectory,
    obstacles: &[Obstacle],
    radius: f64,
) -> bool {
    let mut moved = obstacles.to_vec();
    traj.states().iter().enumerate().all(|(i, s)| {
        let t = i as f64 * traj.dt();
        for (m, o) in moved.iter_mut().zip(obstacles) {
            *m = o.at_time(t);
        }
        is_free_point(grid, s.position(), &moved, radius)
    })
}

/// Signed clearance of a disc of `radius` at `p`: distance between the disc and the
/// nearest occupied cell, obstacle surface or map boundary. Negative on overlap.
/// Occupied cells farther than `search_range` are ignored.
pub fn clearance(
    grid: &OccupancyGrid,
    p: Point,
    obstacles: &[Obstacle],
    radius: f64,
    search_range: f64,
) -> f64 {
    let ext = grid.extent();
    let boundary = (p.x - ext.min.x)
        .min(ext.max.x - p.x)
        .min(p.y - ext.min.y)
        .min(ext.max.y - p.y);
    let cells = grid.nearest_occupied_distance(p, search_range);
    let obs = obstacles
        .iter()
        .map(|o| p.dist(o.center) - o.radius)
        .fold(f64::INFINITY, f64::min);
    boundary.min(cells).min(obs) - radius
}
