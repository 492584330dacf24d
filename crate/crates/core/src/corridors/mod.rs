//! Warm-start trajectories and the convex regions that constrain the QP:
//! obstacle corridors (boxes) and pairwise separating halfplanes.

mod lsc;
mod sfc;

pub use lsc::{build_lsc, last_segment_lsc, segment_lsc, LscPair};
pub use sfc::{build_sfcs, SfcBuilder, SfcOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bernstein::{BernsteinError, ControlGrid, PiecewiseTrajectory};
use crate::geom::{Aabb, Vec2};
use crate::scalar::Scalar;
use crate::{BoundingBox, Point, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorridorError {
    #[error("corridor seed {seed:?} is within clearance of an obstacle")]
    SeedNotFree { seed: BoundingBox },
    #[error("relative hull of segment {segment} is {distance} from the origin, below 2r = {min}")]
    PairTooClose { segment: usize, distance: f64, min: f64 },
    #[error("previous corridors missing or mis-sized")]
    MissingHistory,
    #[error(transparent)]
    Trajectory(#[from] BernsteinError),
}

/// `{x : normal · x >= offset}` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize + Copy", deserialize = "T: Deserialize<'de>"))]
pub struct HalfPlane<T> {
    pub normal: Vec2<T>,
    pub offset: T,
}

impl<T: Scalar> HalfPlane<T> {
    /// Normalises `normal`; `None` for a zero or non-finite normal.
    pub fn new(normal: Vec2<T>, offset: T) -> Option<Self> {
        let len = normal.norm();
        if !(len > T::zero() && len.is_finite() && offset.is_finite()) {
            return None;
        }
        Some(HalfPlane {
            normal: normal / len,
            offset: offset / len,
        })
    }

    /// Halfplane whose boundary sits `margin` beyond `anchor` along `normal`:
    /// `(x - anchor) · normal >= margin`. `normal` must be unit length.
    pub fn from_anchor(anchor: Vec2<T>, normal: Vec2<T>, margin: T) -> Self {
        HalfPlane {
            normal,
            offset: normal.dot(anchor) + margin,
        }
    }

    /// Signed slack; non-negative inside.
    pub fn slack(&self, p: Vec2<T>) -> T {
        self.normal.dot(p) - self.offset
    }

    pub fn contains(&self, p: Vec2<T>, tol: T) -> bool {
        self.slack(p) >= -tol
    }
}

/// Intersection of halfplanes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize + Copy", deserialize = "T: Deserialize<'de>"))]
pub struct ConvexPolytope<T> {
    pub halfplanes: Vec<HalfPlane<T>>,
}

impl<T: Scalar> ConvexPolytope<T> {
    /// The box as four axis halfplanes in the order −x, +x, −y, +y faces.
    pub fn from_box(b: &Aabb<T>) -> Self {
        let one = T::one();
        let zero = T::zero();
        ConvexPolytope {
            halfplanes: vec![
                HalfPlane { normal: Vec2::new(one, zero), offset: b.min.x },
                HalfPlane { normal: Vec2::new(-one, zero), offset: -b.max.x },
                HalfPlane { normal: Vec2::new(zero, one), offset: b.min.y },
                HalfPlane { normal: Vec2::new(zero, -one), offset: -b.max.y },
            ],
        }
    }

    /// Inverse of [`ConvexPolytope::from_box`].
    pub fn as_box(&self) -> Option<Aabb<T>> {
        let one = T::one();
        let zero = T::zero();
        match self.halfplanes.as_slice() {
            [a, b, c, d]
                if a.normal == Vec2::new(one, zero)
                    && b.normal == Vec2::new(-one, zero)
                    && c.normal == Vec2::new(zero, one)
                    && d.normal == Vec2::new(zero, -one) =>
            {
                Some(Aabb::new(Vec2::new(a.offset, c.offset), Vec2::new(-b.offset, -d.offset)))
            }
            _ => None,
        }
    }

    pub fn contains(&self, p: Vec2<T>, tol: T) -> bool {
        self.halfplanes.iter().all(|h| h.contains(p, tol))
    }
}

pub type Polytope = ConvexPolytope<f64>;

/// Warm start for step `step`: a constant curve at `start` on the first step,
/// otherwise the previous plan shifted one segment earlier with the freed
/// final segment parked at the previous end point.
pub fn initial_trajectory(
    prev: Option<&Trajectory>,
    start: Point,
    step: u64,
    segments: usize,
    degree: usize,
    dt: f64,
) -> Result<Trajectory, CorridorError> {
    let Some(prev) = prev.filter(|_| step > 0) else {
        return Ok(PiecewiseTrajectory::stationary(start, segments, degree, dt, step)?);
    };
    let c = prev.control();
    let m_total = c.segments();
    let w = c.degree() + 1;
    let mut pts = Vec::with_capacity(m_total * w);
    pts.extend_from_slice(&c.points()[w..]);
    pts.extend(std::iter::repeat(c.last()).take(w));
    Ok(PiecewiseTrajectory::new(ControlGrid::new(
        m_total,
        c.degree(),
        c.dt(),
        c.start_step() + 1,
        pts,
    )?)?)
}
