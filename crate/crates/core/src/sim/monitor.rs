//! Per-step property checks on committed plans.

use serde::{Deserialize, Serialize};

use crate::bernstein::NormKind;
use crate::geom::distance_to_segment;
use crate::network::AgentId;
use crate::world::{GridWorld, VertexId};
use crate::{BoundingBox, Point, Trajectory};

/// Slack on sampled distances and dynamic limits.
pub const SAFETY_TOL: f64 = 1e-6;
/// Slack on exact geometric facts (on-edge, containment).
pub const GEOMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Collision,
    ObstacleClearance,
    VelocityLimit,
    AccelerationLimit,
    DuplicateWaypoint,
    SubgoalOffEdge,
    SubgoalSeparation,
    /// Warm start outside its obstacle corridor.
    CorridorInfeasible,
    /// Warm start outside a separating halfplane, or no separation possible.
    SeparationInfeasible,
    /// Segment from the warm-start end to the previous subgoal leaves a
    /// final-segment halfplane.
    SubgoalSegmentExposed,
    SubgoalInfeasible,
    WarmStartInfeasible,
    SolverFailure,
    SolverAccuracy,
    Stagnation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub step: u64,
    pub kind: ViolationKind,
    pub agents: Vec<AgentId>,
    /// Offending measurement (distance, speed, residual, step count…).
    pub value: f64,
    pub detail: String,
}

/// What the monitors see after a step commits.
#[derive(Debug, Clone, Copy)]
pub struct StepSnapshot<'a> {
    pub step: u64,
    pub world: &'a GridWorld,
    pub radius: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub samples_per_segment: usize,
    pub trajectories: &'a [Trajectory],
    pub waypoints: &'a [VertexId],
    pub subgoals: &'a [Point],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub violations: Vec<Violation>,
    /// Smallest sampled distance between two agents (infinite if none were
    /// close enough to measure).
    pub min_pair_distance: f64,
    /// Smallest sampled distance to an obstacle, likewise.
    pub min_clearance: f64,
}

/// `per_segment` samples per segment, both ends included.
pub fn sample_points(traj: &Trajectory, per_segment: usize) -> Vec<Point> {
    let c = traj.control();
    let n = per_segment.max(2);
    let mut out = Vec::with_capacity(c.segments() * n);
    for m in 0..c.segments() {
        for i in 0..n {
            out.push(c.eval_segment(m, i as f64 / (n - 1) as f64));
        }
    }
    out
}

fn control_hull_box(traj: &Trajectory) -> BoundingBox {
    BoundingBox::bounding(traj.control().points()).expect("non-empty control grid")
}

/// True iff `g` equals waypoint `w` or lies on a grid edge incident to `w`.
pub fn subgoal_on_edge(world: &GridWorld, g: Point, w: VertexId) -> bool {
    let wp = world.position(w);
    (g - wp).norm() <= GEOMETRY_TOL
        || world
            .neighbors(w)
            .iter()
            .any(|&u| distance_to_segment(world.position(u), wp, g) <= GEOMETRY_TOL)
}

pub fn monitor_step(s: &StepSnapshot) -> MonitorReport {
    let n = s.trajectories.len();
    let mut violations = Vec::new();
    let mut v = |kind, agents: Vec<AgentId>, value: f64, detail: String| {
        violations.push(Violation { step: s.step, kind, agents, value, detail })
    };
    let boxes: Vec<BoundingBox> = s.trajectories.iter().map(control_hull_box).collect();
    let samples: Vec<Vec<Point>> = s
        .trajectories
        .iter()
        .map(|t| sample_points(t, s.samples_per_segment))
        .collect();

    let mut min_pair = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            // Curves stay inside their control boxes; distant pairs are safe.
            if boxes[i].distance_to(&boxes[j]) > 2.0 * s.radius + 1.0 {
                continue;
            }
            let d = samples[i]
                .iter()
                .zip(&samples[j])
                .map(|(a, b)| (*a - *b).norm())
                .fold(f64::INFINITY, f64::min);
            min_pair = min_pair.min(d);
            if d < 2.0 * s.radius - SAFETY_TOL {
                v(ViolationKind::Collision, vec![i, j], d, format!("sampled distance {d:.9} below 2r"));
            }
        }
    }

    let mut min_clear = f64::INFINITY;
    for i in 0..n {
        let near: Vec<&BoundingBox> = s
            .world
            .obstacles()
            .boxes()
            .iter()
            .filter(|o| o.distance_to(&boxes[i]) < s.radius + 1.0)
            .collect();
        if near.is_empty() {
            continue;
        }
        let d = samples[i]
            .iter()
            .flat_map(|p| near.iter().map(move |o| o.signed_distance(*p)))
            .fold(f64::INFINITY, f64::min);
        min_clear = min_clear.min(d);
        if d < s.radius - SAFETY_TOL {
            v(ViolationKind::ObstacleClearance, vec![i], d, format!("sampled clearance {d:.9} below r"));
        }
    }

    for (i, t) in s.trajectories.iter().enumerate() {
        let vel = t.sample_extreme_norm(1, NormKind::Linf).expect("degree ≥ 5");
        if vel > s.v_max + SAFETY_TOL {
            v(ViolationKind::VelocityLimit, vec![i], vel, "velocity bound exceeded".into());
        }
        let acc = t.sample_extreme_norm(2, NormKind::Linf).expect("degree ≥ 5");
        if acc > s.a_max + SAFETY_TOL {
            v(ViolationKind::AccelerationLimit, vec![i], acc, "acceleration bound exceeded".into());
        }
    }

    for i in 0..n {
        for j in i + 1..n {
            if s.waypoints[i] == s.waypoints[j] {
                v(ViolationKind::DuplicateWaypoint, vec![i, j], s.waypoints[i] as f64, "shared waypoint".into());
            }
            let d = (s.subgoals[i] - s.subgoals[j]).norm();
            if d < 2.0 * s.radius - SAFETY_TOL {
                v(ViolationKind::SubgoalSeparation, vec![i, j], d, format!("subgoals {d:.9} apart"));
            }
        }
        if !subgoal_on_edge(s.world, s.subgoals[i], s.waypoints[i]) {
            v(ViolationKind::SubgoalOffEdge, vec![i], 0.0, "subgoal not on an edge at its waypoint".into());
        }
    }

    MonitorReport {
        violations,
        min_pair_distance: min_pair,
        min_clearance: min_clear,
    }
}

/// Counts consecutive steps on which an agent's (position, subgoal,
/// waypoint) stays put while it is away from its goal.
#[derive(Debug, Clone, Default)]
pub struct StagnationTracker {
    reference: Option<(Point, Point, VertexId)>,
    count: u64,
}

impl StagnationTracker {
    /// Returns the current run length of identical states.
    pub fn observe(&mut self, position: Point, subgoal: Point, waypoint: VertexId, at_goal: bool) -> u64 {
        if at_goal {
            self.reference = None;
            self.count = 0;
            return 0;
        }
        match self.reference {
            Some((p, g, w))
                if w == waypoint
                    && (p - position).norm() <= GEOMETRY_TOL
                    && (g - subgoal).norm() <= GEOMETRY_TOL =>
            {
                self.count += 1;
            }
            _ => {
                self.reference = Some((position, subgoal, waypoint));
                self.count = 1;
            }
        }
        self.count
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::PiecewiseTrajectory;
    use crate::world::ObstacleSet;

    fn world(obstacles: Vec<BoundingBox>) -> GridWorld {
        GridWorld::new(Point::zero(), 0.5, 8, 8, ObstacleSet::new(obstacles).unwrap(), 0.15).unwrap()
    }

    fn still(p: Point) -> Trajectory {
        PiecewiseTrajectory::stationary(p, 10, 5, 0.2, 0).unwrap()
    }

    fn snapshot<'a>(w: &'a GridWorld, t: &'a [Trajectory], wp: &'a [VertexId], g: &'a [Point]) -> StepSnapshot<'a> {
        StepSnapshot {
            step: 0,
            world: w,
            radius: 0.15,
            v_max: 1.0,
            a_max: 2.0,
            samples_per_segment: 20,
            trajectories: t,
            waypoints: wp,
            subgoals: g,
        }
    }

    #[test]
    fn separated_stationary_agents_are_clean() {
        let w = world(vec![]);
        let a = Point::new(1.0, 1.0);
        let b = Point::new(1.0 + 0.31, 1.0);
        let t = [still(a), still(b)];
        // Subgoals sit on the edges leaving their waypoints.
        let wp = [w.vertex_at(a).unwrap(), w.vertex_at(Point::new(1.5, 1.0)).unwrap()];
        let g = [a, b];
        let r = monitor_step(&snapshot(&w, &t, &wp, &g));
        assert!(r.violations.is_empty(), "{:?}", r.violations);
        assert!((r.min_pair_distance - 0.31).abs() < 1e-12);
    }

    #[test]
    fn trajectory_through_obstacle_is_reported() {
        let w = world(vec![BoundingBox::new(Point::new(1.9, 0.0), Point::new(2.1, 3.0))]);
        let mut pts = Vec::new();
        for m in 0..10 {
            for l in 0..6 {
                let x = 1.0 + 2.0 * (m as f64 * 5.0 + l as f64) / 50.0;
                pts.push(Point::new(x, 2.5));
            }
        }
        let t = [PiecewiseTrajectory::new(crate::bernstein::ControlGrid::new(10, 5, 0.2, 0, pts).unwrap()).unwrap()];
        let wp = [w.vertex_at(Point::new(1.0, 2.5)).unwrap()];
        let g = [Point::new(1.0, 2.5)];
        let r = monitor_step(&snapshot(&w, &t, &wp, &g));
        assert!(r.violations.iter().any(|v| v.kind == ViolationKind::ObstacleClearance));
        assert!(r.min_clearance < 0.0);
    }

    #[test]
    fn duplicate_waypoints_and_close_subgoals() {
        let w = world(vec![]);
        let a = Point::new(1.0, 1.0);
        let t = [still(a), still(Point::new(3.0, 3.0))];
        let v = w.vertex_at(a).unwrap();
        let g = [a, Point::new(1.2, 1.0)];
        let r = monitor_step(&snapshot(&w, &t, &[v, v], &g));
        let kinds: Vec<_> = r.violations.iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::DuplicateWaypoint));
        assert!(kinds.contains(&ViolationKind::SubgoalSeparation));
    }

    #[test]
    fn subgoal_edge_membership() {
        let w = world(vec![]);
        let v = w.vertex_at(Point::new(1.0, 1.0)).unwrap();
        assert!(subgoal_on_edge(&w, Point::new(1.0, 1.3), v));
        assert!(subgoal_on_edge(&w, Point::new(0.7, 1.0), v));
        assert!(!subgoal_on_edge(&w, Point::new(1.2, 1.2), v));
    }

    #[test]
    fn stagnation_counts_and_resets() {
        let mut s = StagnationTracker::default();
        let p = Point::new(1.0, 1.0);
        for i in 1..=5 {
            assert_eq!(s.observe(p, p, 3, false), i);
        }
        assert_eq!(s.observe(p + Point::new(0.01, 0.0), p, 3, false), 1);
        assert_eq!(s.observe(p, p, 3, true), 0);
    }
}
