//! Coverage trajectory planning for quadrotor inspection missions.
//!
//! Given a 2D world with circular obstacles, a start point, an end point and a
//! set of points of interest (POIs), the planner runs a two-stage pipeline:
//!
//! 1. a genetic algorithm orders the POIs (open-path TSP with fixed
//!    endpoints, [`ga_tsp`]),
//! 2. a damped Gauss-Newton refinement turns that order into a smooth,
//!    obstacle-avoiding, time-efficient uniform cubic B-spline ([`traj_opt`],
//!    backed by [`bspline`] and the distance field of [`obstacle_map`]),
//!
//! and then validates the result by simulating a 6-DOF quadrotor tracking the
//! planned curve at fixed altitude ([`quad_sim`]). [`pipeline`] wires the
//! stages together and writes CSV/JSON/SVG artifacts; the `covplan` binary is
//! a thin CLI over it.

pub mod bspline;
pub mod ga_tsp;
pub mod obstacle_map;
pub mod pipeline;
pub mod quad_sim;
pub mod scenario;
pub mod svg;
pub mod traj_opt;

/// 2D point/vector in meters, used throughout the planner.
pub type Point2 = nalgebra::Vector2<f64>;

pub use obstacle_map::{DistanceField, Obstacle, OccupancyGrid, WorldBounds};
