//! Decentralized multi-agent trajectory planning on a shared grid.
//!
//! Each replanning tick, agents that can hear each other form groups, a
//! per-group coordinator advances grid waypoints with PIBT, and every agent
//! solves a small QP over Bernstein control points constrained to obstacle
//! corridors and pairwise separating halfplanes. The [`sim`] module drives the
//! loop and checks the safety, feasibility and progress properties on every
//! step.

pub mod bernstein;
pub mod corridors;
pub mod geom;
pub mod mapp;
pub mod network;
pub mod optimize;
pub mod scalar;
pub mod sim;
pub mod world;

pub use scalar::Scalar;

/// Planar point or vector in metres.
pub type Point = geom::Vec2<f64>;
/// Axis-aligned rectangle in metres.
pub type BoundingBox = geom::Aabb<f64>;
/// Planned or shared agent trajectory.
pub type Trajectory = bernstein::PiecewiseTrajectory<f64>;
pub type Polytope = corridors::ConvexPolytope<f64>;
