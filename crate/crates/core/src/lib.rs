//! Navigation stack for a kinematic-bicycle vehicle on a 2-D occupancy grid.
//!
//! An informed, any-angle RRT* global planner produces a reference path. Two local
//! controllers track it: a grid-search MPC and an obstacle-avoiding pure pursuit.
//! Their predicted state sequences are fused per dimension with weights derived
//! from normalized mutual information. A deterministic simulator closes the loop
//! with moving obstacles and records the metrics used to compare controllers.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fusion;
pub mod geometry;
pub mod gridmap;
pub mod metrics;
pub mod mpc;
pub mod planner;
pub mod pursuit;
pub mod reference;
pub mod sim;
pub mod vehicle;

pub use error::{Error, Result};
pub use geometry::Point;
pub use gridmap::{Obstacle, OccupancyGrid};
pub use vehicle::{ControlInput, Trajectory, VehicleParams, VehicleState};
