use super::{CorridorError, HalfPlane};
use crate::geom::{closest_between_segments, closest_point_to_origin};
use crate::{Point, Trajectory};

/// Relative distances below `2r` by at most this much are still accepted.
const SEPARATION_TOL: f64 = 1e-9;

/// Separating halfplanes for one pair of agents, one per control point of the
/// warm start, indexed `segment * (degree + 1) + l`.
#[derive(Debug, Clone, PartialEq)]
pub struct LscPair {
    /// Constraints for the agent passed first.
    pub first: Vec<HalfPlane<f64>>,
    /// Mirror constraints for the agent passed second.
    pub second: Vec<HalfPlane<f64>>,
}

/// Halfplanes for segment `segment` from the two warm-start control polygons.
/// The normal points from the second hull to the first along the closest
/// point of their Minkowski difference; every pair of control points is split
/// symmetrically about its midpoint with `r` on each side.
pub fn segment_lsc(
    first: &[Point],
    second: &[Point],
    radius: f64,
    segment: usize,
) -> Result<(Vec<HalfPlane<f64>>, Vec<HalfPlane<f64>>), CorridorError> {
    let rel: Vec<Point> = first.iter().zip(second).map(|(&a, &b)| a - b).collect();
    let closest = closest_point_to_origin(&rel);
    let dist = closest.norm();
    if !(dist >= 2.0 * radius - SEPARATION_TOL) || dist == 0.0 {
        return Err(CorridorError::PairTooClose { segment, distance: dist, min: 2.0 * radius });
    }
    let n = closest / dist;
    let mut a = Vec::with_capacity(first.len());
    let mut b = Vec::with_capacity(first.len());
    for (&pi, &pj) in first.iter().zip(second) {
        let mid = n.dot(pi + pj) * 0.5;
        a.push(HalfPlane { normal: n, offset: mid + radius });
        b.push(HalfPlane { normal: -n, offset: radius - mid });
    }
    Ok((a, b))
}

/// Halfplane pair for the final segment after the first step, separating the
/// segments from each warm-start end point to that agent's previous subgoal.
pub fn last_segment_lsc(
    first: (Point, Point),
    second: (Point, Point),
    radius: f64,
    segment: usize,
) -> Result<(HalfPlane<f64>, HalfPlane<f64>), CorridorError> {
    let pair = closest_between_segments(first.0, first.1, second.0, second.1);
    let diff = pair.on_first - pair.on_second;
    let dist = diff.norm();
    if !(dist >= 2.0 * radius - SEPARATION_TOL) || dist == 0.0 {
        return Err(CorridorError::PairTooClose { segment, distance: dist, min: 2.0 * radius });
    }
    let n = diff / dist;
    let mid = n.dot(pair.on_first + pair.on_second) * 0.5;
    Ok((
        HalfPlane { normal: n, offset: mid + radius },
        HalfPlane { normal: -n, offset: radius - mid },
    ))
}

/// All halfplanes between two agents for one step. `prev_subgoals` is `None`
/// on the first step; otherwise the final segment uses
/// [`last_segment_lsc`] on the previous subgoals of the first and second
/// agent.
pub fn build_lsc(
    first: &Trajectory,
    second: &Trajectory,
    prev_subgoals: Option<(Point, Point)>,
    radius: f64,
) -> Result<LscPair, CorridorError> {
    let (ci, cj) = (first.control(), second.control());
    let segs = ci.segments();
    let w = ci.degree() + 1;
    let mut out = LscPair {
        first: Vec::with_capacity(segs * w),
        second: Vec::with_capacity(segs * w),
    };
    for m in 0..segs {
        if m + 1 == segs {
            if let Some((gi, gj)) = prev_subgoals {
                let (a, b) = last_segment_lsc((ci.last(), gi), (cj.last(), gj), radius, m)?;
                out.first.extend(std::iter::repeat(a).take(w));
                out.second.extend(std::iter::repeat(b).take(w));
                continue;
            }
        }
        let (a, b) = segment_lsc(ci.segment(m), cj.segment(m), radius, m)?;
        out.first.extend(a);
        out.second.extend(b);
    }
    Ok(out)
}
