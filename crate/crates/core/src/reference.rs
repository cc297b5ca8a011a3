//! Densified reference paths, monotone progress tracking and time-parameterized
//! reference windows for the local controllers.

use crate::geometry::Point;
use crate::vehicle::{Trajectory, VehicleState};

/// Polyline resampled at (at most) a fixed spacing, with cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath {
    points: Vec<Point>,
    arc: Vec<f64>,
}

impl ReferencePath {
    /// Resamples `waypoints` so that consecutive points are at most `spacing` apart.
    /// Original waypoints are kept.
    pub fn from_waypoints(waypoints: &[Point], spacing: f64) -> Self {
        assert!(!waypoints.is_empty(), "reference path needs at least one waypoint");
        assert!(spacing > 0.0, "spacing must be positive");
        let mut points = vec![waypoints[0]];
        for w in waypoints.windows(2) {
            let len = w[0].dist(w[1]);
            let n = (len / spacing).ceil().max(1.0) as usize;
            for k in 1..=n {
                points.push(w[0].lerp(w[1], k as f64 / n as f64));
            }
        }
        points.dedup();
        let mut arc = Vec::with_capacity(points.len());
        let mut s = 0.0;
        arc.push(0.0);
        for w in points.windows(2) {
            s += w[0].dist(w[1]);
            arc.push(s);
        }
        Self { points, arc }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn goal(&self) -> Point {
        self.points[self.points.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.arc[self.arc.len() - 1]
    }

    pub fn arc_at(&self, index: usize) -> f64 {
        self.arc[index]
    }

    /// Nearest point index in `[from, from + window]`; lowest index wins ties.
    pub fn nearest_index(&self, p: Point, from: usize, window: usize) -> usize {
        let from = from.min(self.points.len() - 1);
        let to = (from + window).min(self.points.len() - 1);
        let mut best = from;
        let mut best_d = f64::INFINITY;
        for i in from..=to {
            let d = self.points[i].dist(p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Arc length of the orthogonal projection of `p` onto the segments adjacent to `index`.
    pub fn project(&self, p: Point, index: usize) -> f64 {
        let mut best_s = self.arc[index];
        let mut best_d = self.points[index].dist(p);
        let lo = index.saturating_sub(1);
        let hi = (index + 1).min(self.points.len() - 1);
        for i in lo..hi {
            let (a, b) = (self.points[i], self.points[i + 1]);
            let ab = b - a;
            let len2 = ab.dot(ab);
            if len2 == 0.0 {
                continue;
            }
            let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
            let q = a + ab * t;
            let d = q.dist(p);
            if d < best_d {
                best_d = d;
                best_s = self.arc[i] + t * len2.sqrt();
            }
        }
        best_s
    }

    /// Point and tangent heading at arc length `s` (clamped to the path).
    pub fn sample(&self, s: f64) -> (Point, f64) {
        if self.points.len() == 1 {
            return (self.points[0], 0.0);
        }
        let s = s.clamp(0.0, self.length());
        let i = match self.arc.binary_search_by(|a| a.total_cmp(&s)) {
            Ok(i) => i.min(self.points.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.points.len() - 2),
        };
        let (a, b) = (self.points[i], self.points[i + 1]);
        let seg = self.arc[i + 1] - self.arc[i];
        let t = if seg > 0.0 { (s - self.arc[i]) / seg } else { 0.0 };
        (a.lerp(b, t), (b.y - a.y).atan2(b.x - a.x))
    }
}

/// Monotone progress along a [`ReferencePath`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathTracker {
    progress: usize,
    window: usize,
}

impl PathTracker {
    pub fn new(window: usize) -> Self {
        Self {
            progress: 0,
            window: window.max(1),
        }
    }

    pub fn progress(&self) -> usize {
        self.progress
    }

    /// Advances progress to the nearest point ahead of the current progress.
    pub fn update(&mut self, path: &ReferencePath, p: Point) -> usize {
        self.progress = path.nearest_index(p, self.progress, self.window);
        self.progress
    }
}

/// Reference states for an `steps`-step horizon: state `i` sits `i · cruise · dt`
/// of arc length ahead of the projection of the vehicle onto the path, clamped to
/// the path end.
pub fn reference_window(
    path: &ReferencePath,
    progress: usize,
    state: &VehicleState,
    steps: usize,
    dt: f64,
    cruise_speed: f64,
) -> Trajectory {
    let s0 = path.project(state.position(), progress);
    let states = (0..=steps)
        .map(|i| {
            let (p, heading) = path.sample(s0 + i as f64 * cruise_speed * dt);
            VehicleState::new(p.x, p.y, heading, cruise_speed)
        })
        .collect();
    Trajectory::new(states, dt).expect("non-empty reference window")
}
