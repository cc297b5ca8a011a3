//! Informed any-angle RRT* global planner.
//!
//! The tree grows as in RRT* (nearest, steer, choose-parent, rewire). Once a
//! first solution exists, samples are drawn from the prolate ellipse whose foci
//! are the start and goal and whose major axis is the best cost so far. New nodes
//! may attach directly to their parent's parent when line of sight holds, and the
//! extracted path gets a final greedy line-of-sight shortcut pass.

use crate::error::{Error, Result};
use crate::geometry::{polyline_length, Point};
use crate::gridmap::{is_free_point, is_free_segment, Extent, Obstacle, OccupancyGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub max_iterations: usize,
    /// Maximum extension per iteration [m].
    pub step_size: f64,
    /// A node within this distance of the goal (with line of sight) closes a solution [m].
    pub goal_tolerance: f64,
    /// Neighbourhood for choose-parent and rewiring [m].
    pub rewire_radius: f64,
    /// Probability of sampling the goal directly.
    pub goal_bias: f64,
    pub rng_seed: u64,
    /// Disc radius used for every collision check of the tree [m].
    pub clearance: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 3000,
            step_size: 1.0,
            goal_tolerance: 1.0,
            rewire_radius: 5.0,
            goal_bias: 0.05,
            rng_seed: 0,
            clearance: 1.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::InvalidConfig("planner step_size must be > 0".into()));
        }
        if !(self.goal_tolerance > 0.0) {
            return Err(Error::InvalidConfig("planner goal_tolerance must be > 0".into()));
        }
        if !(self.rewire_radius > 0.0) {
            return Err(Error::InvalidConfig("planner rewire_radius must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(Error::InvalidConfig("planner goal_bias must lie in [0, 1]".into()));
        }
        if !(self.clearance >= 0.0) {
            return Err(Error::InvalidConfig("planner clearance must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    /// Waypoints from start to goal.
    pub path: Vec<Point>,
    /// Polyline length of `path` [m].
    pub cost: f64,
    pub iterations_used: usize,
    /// `(iteration, best cost)` recorded at every improvement.
    pub cost_history: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
struct Node {
    p: Point,
    parent: Option<usize>,
    cost: f64,
    children: Vec<usize>,
}

struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn nearest(&self, p: Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.p.dist(p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    fn within(&self, p: Point, radius: f64) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.p.dist(p) <= radius)
            .map(|(i, _)| i)
            .collect()
    }

    fn reparent(&mut self, child: usize, new_parent: usize) {
        if let Some(old) = self.nodes[child].parent {
            self.nodes[old].children.retain(|&c| c != child);
        }
        self.nodes[child].parent = Some(new_parent);
        self.nodes[new_parent].children.push(child);
        self.nodes[child].cost =
            self.nodes[new_parent].cost + self.nodes[new_parent].p.dist(self.nodes[child].p);
        let mut stack = self.nodes[child].children.clone();
        while let Some(n) = stack.pop() {
            let parent = self.nodes[n].parent.expect("child without parent");
            self.nodes[n].cost = self.nodes[parent].cost + self.nodes[parent].p.dist(self.nodes[n].p);
            stack.extend_from_slice(&self.nodes[n].children);
        }
    }

    fn path_to_root(&self, mut idx: usize) -> Vec<Point> {
        let mut out = vec![self.nodes[idx].p];
        while let Some(p) = self.nodes[idx].parent {
            out.push(self.nodes[p].p);
            idx = p;
        }
        out.reverse();
        out
    }
}

/// Draws a sample for the planner.
///
/// With an infinite `c_best` the sample is uniform over `extent`; otherwise it is
/// uniform over the ellipse with foci `start`/`goal` and major axis `c_best`.
pub fn informed_sample<R: Rng + ?Sized>(
    start: Point,
    goal: Point,
    c_best: f64,
    extent: &Extent,
    rng: &mut R,
) -> Result<Point> {
    if c_best.is_infinite() {
        return Ok(Point::new(
            extent.min.x + rng.gen::<f64>() * extent.width(),
            extent.min.y + rng.gen::<f64>() * extent.height(),
        ));
    }
    let c_min = start.dist(goal);
    if !(c_best >= c_min) {
        return Err(Error::Domain(format!(
            "informed sampling needs c_best >= c_min ({c_best} < {c_min})"
        )));
    }
    let semi_major = c_best / 2.0;
    let semi_minor = (c_best * c_best - c_min * c_min).max(0.0).sqrt() / 2.0;
    let r = rng.gen::<f64>().sqrt();
    let phi = rng.gen::<f64>() * TAU;
    let local = Point::new(r * phi.cos() * semi_major, r * phi.sin() * semi_minor);
    let heading = (goal.y - start.y).atan2(goal.x - start.x);
    let (sin, cos) = heading.sin_cos();
    let center = start.lerp(goal, 0.5);
    Ok(Point::new(
        center.x + cos * local.x - sin * local.y,
        center.y + sin * local.x + cos * local.y,
    ))
}

/// Greedy line-of-sight pass: from each kept waypoint jump to the farthest later
/// waypoint that is directly reachable.
pub fn shortcut_path(
    path: &[Point],
    grid: &OccupancyGrid,
    obstacles: &[Obstacle],
    radius: f64,
) -> Vec<Point> {
    if path.len() <= 2 {
        return path.to_vec();
    }
    let mut out = vec![path[0]];
    let mut i = 0;
    while i < path.len() - 1 {
        let mut j = path.len() - 1;
        while j > i + 1 && !is_free_segment(grid, path[i], path[j], obstacles, radius) {
            j -= 1;
        }
        out.push(path[j]);
        i = j;
    }
    out
}

/// Plans a collision-free path from `start` to `goal` around the grid and the
/// given static obstacles.
pub fn plan(
    grid: &OccupancyGrid,
    obstacles: &[Obstacle],
    start: Point,
    goal: Point,
    cfg: &PlannerConfig,
) -> Result<PlanResult> {
    cfg.validate()?;
    let radius = cfg.clearance;
    if !is_free_point(grid, start, obstacles, radius) {
        return Err(Error::InvalidEndpoint {
            which: "start",
            x: start.x,
            y: start.y,
        });
    }
    if !is_free_point(grid, goal, obstacles, radius) {
        return Err(Error::InvalidEndpoint {
            which: "goal",
            x: goal.x,
            y: goal.y,
        });
    }
    if start == goal {
        return Ok(PlanResult {
            path: vec![start],
            cost: 0.0,
            iterations_used: 0,
            cost_history: vec![(0, 0.0)],
        });
    }

    let extent = grid.extent();
    let c_min = start.dist(goal);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut tree = Tree {
        nodes: vec![Node {
            p: start,
            parent: None,
            cost: 0.0,
            children: Vec::new(),
        }],
    };
    let mut goal_nodes: Vec<usize> = Vec::new();
    let mut history: Vec<(usize, f64)> = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    let free_seg = |a: Point, b: Point| is_free_segment(grid, a, b, obstacles, radius);

    if start.dist(goal) <= cfg.goal_tolerance && free_seg(start, goal) {
        goal_nodes.push(0);
    }

    for it in 1..=cfg.max_iterations {
        let c_best = best.map_or(f64::INFINITY, |(_, c)| c.max(c_min));
        let sample = if rng.gen::<f64>() < cfg.goal_bias {
            goal
        } else {
            informed_sample(start, goal, c_best, &extent, &mut rng)?
        };

        let nearest = tree.nearest(sample);
        let from = tree.nodes[nearest].p;
        let d = from.dist(sample);
        if d == 0.0 {
            continue;
        }
        let new_p = if d <= cfg.step_size {
            sample
        } else {
            from + (sample - from) * (cfg.step_size / d)
        };
        if !is_free_point(grid, new_p, obstacles, radius) {
            continue;
        }

        let mut neighbors = tree.within(new_p, cfg.rewire_radius.max(cfg.step_size));
        if !neighbors.contains(&nearest) {
            neighbors.push(nearest);
        }
        let mut candidates: Vec<(f64, usize)> = neighbors
            .iter()
            .map(|&n| (tree.nodes[n].cost + tree.nodes[n].p.dist(new_p), n))
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let Some(&(mut new_cost, mut parent)) = candidates
            .iter()
            .find(|(_, n)| free_seg(tree.nodes[*n].p, new_p))
        else {
            continue;
        };

        // Any-angle relaxation: attach to the grandparent when it is visible.
        if let Some(grand) = tree.nodes[parent].parent {
            let via_grand = tree.nodes[grand].cost + tree.nodes[grand].p.dist(new_p);
            if via_grand < new_cost && free_seg(tree.nodes[grand].p, new_p) {
                parent = grand;
                new_cost = via_grand;
            }
        }

        let new_idx = tree.nodes.len();
        tree.nodes.push(Node {
            p: new_p,
            parent: Some(parent),
            cost: new_cost,
            children: Vec::new(),
        });
        tree.nodes[parent].children.push(new_idx);

        for &n in &neighbors {
            if n == parent || tree.nodes[n].parent.is_none() {
                continue;
            }
            let through_new = new_cost + new_p.dist(tree.nodes[n].p);
            if through_new < tree.nodes[n].cost && free_seg(new_p, tree.nodes[n].p) {
                tree.reparent(n, new_idx);
            }
        }

        if new_p.dist(goal) <= cfg.goal_tolerance && free_seg(new_p, goal) {
            goal_nodes.push(new_idx);
        }

        let current = goal_nodes
            .iter()
            .map(|&g| (g, tree.nodes[g].cost + tree.nodes[g].p.dist(goal)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        if let Some((g, c)) = current {
            match best {
                Some((_, b)) if c >= b => {}
                _ => {
                    history.push((it, c));
                    best = Some((g, c));
                }
            }
        }
    }

    let Some((goal_node, _)) = best else {
        return Err(Error::PlanningFailed {
            iterations: cfg.max_iterations,
        });
    };
    let mut raw = tree.path_to_root(goal_node);
    if *raw.last().expect("non-empty path") != goal {
        raw.push(goal);
    }
    let path = shortcut_path(&raw, grid, obstacles, radius);
    let cost = polyline_length(&path);
    if history.last().is_none_or(|&(_, c)| cost < c) {
        history.push((cfg.max_iterations, cost));
    }
    Ok(PlanResult {
        path,
        cost,
        iterations_used: cfg.max_iterations,
        cost_history: history,
    })
}

/// Text export: one `x,y` line per waypoint, then `cost=<c> iterations=<n>`.
pub fn format_path_export(result: &PlanResult) -> String {
    let mut out = String::new();
    for p in &result.path {
        let _ = writeln!(out, "{},{}", p.x, p.y);
    }
    let _ = writeln!(out, "cost={} iterations={}", result.cost, result.iterations_used);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_grid() -> OccupancyGrid {
        OccupancyGrid::empty(50, 50, 1.0).unwrap()
    }

    #[test]
    fn start_equals_goal() {
        let g = open_grid();
        let p = Point::new(10.0, 10.0);
        let r = plan(&g, &[], p, p, &PlannerConfig::default()).unwrap();
        assert_eq!(r.path, vec![p]);
        assert_eq!(r.cost, 0.0);
    }

    #[test]
    fn occupied_goal_is_invalid_endpoint() {
        let mut g = open_grid();
        g.set_occupied(40, 40, true);
        let err = plan(&g, &[], Point::new(5.0, 5.0), Point::new(40.5, 40.5), &PlannerConfig::default());
        assert!(matches!(err, Err(Error::InvalidEndpoint { which: "goal", .. })));
    }

    #[test]
    fn walled_goal_is_planning_failure() {
        let mut g = open_grid();
        for i in 30..50 {
            g.set_occupied(i, 30, true);
            g.set_occupied(30, i, true);
        }
        let cfg = PlannerConfig {
            max_iterations: 500,
            ..Default::default()
        };
        let err = plan(&g, &[], Point::new(5.0, 5.0), Point::new(40.0, 40.0), &cfg);
        assert!(matches!(err, Err(Error::PlanningFailed { iterations: 500 })));
    }

    #[test]
    fn open_map_plan_respects_lower_bound() {
        let g = open_grid();
        let r = plan(&g, &[], Point::new(5.0, 5.0), Point::new(45.0, 45.0), &PlannerConfig::default()).unwrap();
        assert!(r.cost >= 40.0 * 2f64.sqrt() - 1e-9);
        assert_eq!(r.path[0], Point::new(5.0, 5.0));
        assert_eq!(*r.path.last().unwrap(), Point::new(45.0, 45.0));
        assert!((r.cost - polyline_length(&r.path)).abs() < 1e-9);
    }

    #[test]
    fn shortcut_examples() {
        let g = open_grid();
        let collinear = [Point::new(5.0, 5.0), Point::new(10.0, 5.0), Point::new(15.0, 5.0)];
        assert_eq!(shortcut_path(&collinear, &g, &[], 1.0).len(), 2);

        let zigzag = [
            Point::new(5.0, 5.0),
            Point::new(10.0, 9.0),
            Point::new(15.0, 5.0),
            Point::new(20.0, 9.0),
            Point::new(25.0, 5.0),
        ];
        let out = shortcut_path(&zigzag, &g, &[], 1.0);
        assert_eq!(out, vec![zigzag[0], zigzag[4]]);
        assert_eq!(polyline_length(&out), 20.0);

        let mut walled = open_grid();
        for i in 0..20 {
            for j in 20..30 {
                walled.set_occupied(i, j, true);
            }
        }
        // Corner block occupies x<20, 20<=y<30; go up the right side then left.
        let l_path = [Point::new(10.0, 10.0), Point::new(25.0, 10.0), Point::new(25.0, 40.0), Point::new(10.0, 40.0)];
        let out = shortcut_path(&l_path, &walled, &[], 1.0);
        assert!(out.windows(2).all(|w| is_free_segment(&walled, w[0], w[1], &[], 1.0)));
        assert_eq!(out.first(), l_path.first());
        assert_eq!(out.last(), l_path.last());
        let l2 = [Point::new(10.0, 15.0), Point::new(25.0, 15.0), Point::new(25.0, 35.0)];
        assert_eq!(shortcut_path(&l2, &walled, &[], 1.0), l2.to_vec());
    }

    #[test]
    fn informed_sample_domain_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ext = open_grid().extent();
        let r = informed_sample(Point::new(0.0, 0.0), Point::new(10.0, 0.0), 9.0, &ext, &mut rng);
        assert!(matches!(r, Err(Error::Domain(_))));
        let p = informed_sample(Point::new(0.0, 0.0), Point::new(10.0, 0.0), f64::INFINITY, &ext, &mut rng).unwrap();
        assert!(ext.contains(p));
    }

    #[test]
    fn export_format() {
        let r = PlanResult {
            path: vec![Point::new(1.0, 2.5), Point::new(3.0, 4.0)],
            cost: 2.5,
            iterations_used: 7,
            cost_history: vec![],
        };
        assert_eq!(format_path_export(&r), "1,2.5\n3,4\ncost=2.5 iterations=7\n");
    }
}
