use super::{CorridorError, Polytope};
use crate::world::ObstacleSet;
use crate::{BoundingBox, Point, Trajectory};

/// Slack kept between a grown face and the obstacle limit.
const FACE_MARGIN: f64 = 1e-9;

/// Grows obstacle-free boxes around seed points by axis search.
#[derive(Debug, Clone, Copy)]
pub struct SfcBuilder<'a> {
    pub obstacles: &'a ObstacleSet,
    /// Boxes never leave this region.
    pub workspace: BoundingBox,
    /// Required gap between box and obstacles (the agent radius).
    pub clearance: f64,
    /// Largest single move of one face.
    pub step: f64,
}

impl SfcBuilder<'_> {
    pub fn seed_free(&self, seed: &BoundingBox) -> bool {
        self.obstacles.box_free(seed, self.clearance)
    }

    /// How far the face on `axis` (towards `+` if `positive`) may move before
    /// the box would come within clearance of an obstacle or leave the
    /// workspace.
    fn room(&self, lo: [f64; 2], hi: [f64; 2], axis: usize, positive: bool) -> f64 {
        let other = 1 - axis;
        let ws_lo = [self.workspace.min.x, self.workspace.min.y];
        let ws_hi = [self.workspace.max.x, self.workspace.max.y];
        let mut room = if positive { ws_hi[axis] - hi[axis] } else { lo[axis] - ws_lo[axis] };
        let r = self.clearance;
        for o in self.obstacles.boxes() {
            let (o_lo, o_hi) = ([o.min.x, o.min.y], [o.max.x, o.max.y]);
            let side_gap = (o_lo[other] - hi[other]).max(lo[other] - o_hi[other]).max(0.0);
            if side_gap >= r {
                continue;
            }
            let ahead = if positive { o_lo[axis] - hi[axis] } else { lo[axis] - o_hi[axis] };
            if ahead < 0.0 {
                continue;
            }
            room = room.min(ahead - (r * r - side_gap * side_gap).sqrt() - FACE_MARGIN);
        }
        room.max(0.0)
    }

    /// Largest box reachable from `seed` by moving one face at a time, at
    /// most `step` per move, cycling −x, +x, −y, +y until nothing moves.
    pub fn expand(&self, seed: BoundingBox) -> Result<BoundingBox, CorridorError> {
        if !self.seed_free(&seed) {
            return Err(CorridorError::SeedNotFree { seed });
        }
        let mut lo = [seed.min.x, seed.min.y];
        let mut hi = [seed.max.x, seed.max.y];
        loop {
            let mut grew = false;
            for (axis, positive) in [(0, false), (0, true), (1, false), (1, true)] {
                let mv = self.room(lo, hi, axis, positive).min(self.step);
                if mv > FACE_MARGIN {
                    if positive {
                        hi[axis] += mv;
                    } else {
                        lo[axis] -= mv;
                    }
                    grew = true;
                }
            }
            if !grew {
                return Ok(BoundingBox::new(Point::new(lo[0], lo[1]), Point::new(hi[0], hi[1])));
            }
        }
    }
}

/// Corridors for one agent at one step, one per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SfcOutcome {
    pub corridors: Vec<Polytope>,
    /// False when the final corridor had to be seeded without the waypoint.
    pub waypoint_in_seed: bool,
}

/// Corridors for the warm start `init`.
///
/// First step (`prev` is `None`): one box around the start and the waypoint,
/// shared by every segment. Later steps reuse the previous corridors shifted
/// by one segment; the final one is grown around the warm start's end point,
/// the previous subgoal and the waypoint when their bounding box is free, and
/// around the first two alone otherwise.
pub fn build_sfcs(
    builder: &SfcBuilder,
    prev: Option<&[Polytope]>,
    init: &Trajectory,
    prev_subgoal: Point,
    waypoint: Point,
) -> Result<SfcOutcome, CorridorError> {
    let segments = init.segments();
    let seed_of = |pts: &[Point]| BoundingBox::bounding(pts).expect("non-empty seed");
    match prev {
        None => {
            let b = builder.expand(seed_of(&[init.control().first(), waypoint]))?;
            Ok(SfcOutcome {
                corridors: vec![Polytope::from_box(&b); segments],
                waypoint_in_seed: true,
            })
        }
        Some(prev) => {
            if prev.len() != segments {
                return Err(CorridorError::MissingHistory);
            }
            let end = init.control().last();
            let full = seed_of(&[end, prev_subgoal, waypoint]);
            let (seed, waypoint_in_seed) = if builder.seed_free(&full) {
                (full, true)
            } else {
                (seed_of(&[end, prev_subgoal]), false)
            };
            let b = builder.expand(seed)?;
            let mut corridors = prev[1..].to_vec();
            corridors.push(Polytope::from_box(&b));
            Ok(SfcOutcome { corridors, waypoint_in_seed })
        }
    }
}
