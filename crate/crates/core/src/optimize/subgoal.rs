use crate::corridors::HalfPlane;
use crate::Point;

use super::OptimizeError;

/// Slack granted to the anchor when checking the returned subgoal.
const SUBGOAL_TOL: f64 = 1e-9;

/// Inputs of the subgoal line search.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgoalProblem<'a> {
    /// Feasible fallback: the start on the first step, else the previous subgoal.
    pub anchor: Point,
    /// The waypoint.
    pub target: Point,
    /// Final-segment corridor and separating halfplanes.
    pub constraints: &'a [HalfPlane<f64>],
}

/// Fraction `δ ∈ [0, 1]` of the way back from the target towards the anchor:
/// the smallest one whose point satisfies every halfplane.
pub fn subgoal_fraction(p: &SubgoalProblem) -> Result<f64, OptimizeError> {
    let dir = p.anchor - p.target;
    let mut lo: f64 = 0.0;
    let mut hi: f64 = 1.0;
    for (i, h) in p.constraints.iter().enumerate() {
        // n·(w + δ·dir) ≥ o  ⇔  δ·(n·dir) ≥ o − n·w
        let rate = h.normal.dot(dir);
        let need = h.offset - h.normal.dot(p.target);
        if rate > 0.0 {
            lo = lo.max(need / rate);
        } else if rate < 0.0 {
            hi = hi.min(need / rate);
        } else if need > SUBGOAL_TOL {
            return Err(OptimizeError::SubgoalInfeasible { constraint: i, shortfall: need });
        }
    }
    if lo > hi + SUBGOAL_TOL || lo > 1.0 + SUBGOAL_TOL {
        return Err(OptimizeError::SubgoalInfeasible { constraint: usize::MAX, shortfall: lo - hi.min(1.0) });
    }
    Ok(lo.min(1.0))
}

/// The subgoal `w + δ·(anchor − w)` with `δ` from [`subgoal_fraction`]. Exactly
/// the target when no halfplane cuts in.
pub fn optimize_subgoal(p: &SubgoalProblem) -> Result<Point, OptimizeError> {
    let delta = subgoal_fraction(p)?;
    let g = if delta == 0.0 {
        p.target
    } else if delta == 1.0 {
        p.anchor
    } else {
        p.target + (p.anchor - p.target) * delta
    };
    if let Some((i, h)) = p
        .constraints
        .iter()
        .enumerate()
        .find(|(_, h)| !h.contains(g, SUBGOAL_TOL))
    {
        return Err(OptimizeError::SubgoalInfeasible { constraint: i, shortfall: -h.slack(g) });
    }
    Ok(g)
}
