//! Grid waypoints: PIBT run by each group's coordinator, gated per agent so
//! that a waypoint only advances once its subgoal has caught up.

mod pibt;

pub use pibt::{pibt_step, GoalDistances, PibtAgent};

use crate::network::{AgentId, ConnectedGroup};
use crate::world::{CommRange, GridWorld, VertexId};
use crate::{Point, Trajectory};

/// What the coordinator knows about one member at the start of a step.
#[derive(Debug, Clone)]
pub struct AgentPlanState {
    pub id: AgentId,
    /// Previous waypoint; the start vertex before the first step.
    pub waypoint: VertexId,
    /// Previous subgoal; the start position before the first step.
    pub subgoal: Point,
    /// Trajectory committed last step, `None` before the first step.
    pub prev_trajectory: Option<Trajectory>,
    pub desired_goal: VertexId,
    /// Steps since the waypoint last sat on the desired goal.
    pub elapsed: u64,
}

impl AgentPlanState {
    fn subgoal_reached_waypoint(&self, world: &GridWorld) -> bool {
        self.subgoal == world.position(self.waypoint)
    }

    /// The candidate must stay strictly within half the communication range of
    /// every segment boundary of the previous trajectory.
    fn within_range(&self, candidate: Point, range: CommRange) -> bool {
        if range.is_infinite() {
            return true;
        }
        let half = range.metres() / 2.0;
        match &self.prev_trajectory {
            None => true,
            Some(t) => t.control().knots().iter().all(|&p| (candidate - p).norm_inf() < half),
        }
    }
}

/// New waypoint for every member of `group`, in member order. `states` is
/// indexed by agent id and must cover every member. `seed` feeds PIBT's tie
/// breaking together with the step and the coordinator id.
pub fn decentralized_mapp(
    world: &GridWorld,
    dist: &GoalDistances,
    group: &ConnectedGroup,
    states: &[AgentPlanState],
    step: u64,
    range: CommRange,
    seed: u64,
) -> Vec<VertexId> {
    let members: Vec<&AgentPlanState> = group.members.iter().map(|&id| &states[id]).collect();
    let pibt_agents: Vec<PibtAgent> = members
        .iter()
        .map(|s| PibtAgent {
            id: s.id,
            at: s.waypoint,
            goal: s.desired_goal,
            elapsed: s.elapsed,
        })
        .collect();
    let tie_seed = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(step.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(group.coordinator as u64);
    let proposal = pibt_step(world, dist, &pibt_agents, tie_seed);

    let mut next: Vec<VertexId> = members
        .iter()
        .zip(&proposal)
        .map(|(s, &v)| {
            let advance = step == 0
                || (s.subgoal_reached_waypoint(world) && s.within_range(world.position(v), range));
            if advance {
                v
            } else {
                s.waypoint
            }
        })
        .collect();

    // Members are in ascending id order, so the first holder of a vertex in
    // this scan is the one that keeps it when several advanced agents collide.
    loop {
        let mut changed = false;
        for j in 0..next.len() {
            let prev = members[j].waypoint;
            if next[j] == prev {
                continue;
            }
            let loses = (0..next.len()).any(|q| {
                q != j && next[q] == next[j] && (next[q] == members[q].waypoint || q < j)
            });
            if loses {
                next[j] = prev;
                changed = true;
            }
        }
        if !changed {
            return next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::PiecewiseTrajectory;
    use crate::world::ObstacleSet;

    fn line_world(n: usize) -> GridWorld {
        GridWorld::new(Point::zero(), 0.5, n, 1, ObstacleSet::empty(), 0.15).unwrap()
    }

    fn state(world: &GridWorld, id: AgentId, at: VertexId, goal: VertexId) -> AgentPlanState {
        AgentPlanState {
            id,
            waypoint: at,
            subgoal: world.position(at),
            prev_trajectory: Some(PiecewiseTrajectory::stationary(world.position(at), 10, 5, 0.2, 0).unwrap()),
            desired_goal: goal,
            elapsed: 0,
        }
    }

    fn everyone(n: usize) -> ConnectedGroup {
        ConnectedGroup {
            members: (0..n).collect(),
            coordinator: 0,
        }
    }

    #[test]
    fn first_step_follows_pibt() {
        let w = line_world(6);
        let mut s = vec![state(&w, 0, 0, 5), state(&w, 1, 5, 3)];
        s[0].prev_trajectory = None;
        s[1].prev_trajectory = None;
        let d = GoalDistances::new(&w, [5, 3]);
        let out = decentralized_mapp(&w, &d, &everyone(2), &s, 0, CommRange::finite(2.0).unwrap(), 0);
        assert_eq!(out, vec![1, 4]);
    }

    #[test]
    fn lagging_subgoal_holds_waypoint() {
        let w = line_world(6);
        let mut s = vec![state(&w, 0, 2, 5)];
        s[0].subgoal = Point::new(0.8, 0.0);
        let d = GoalDistances::new(&w, [5]);
        let out = decentralized_mapp(&w, &d, &everyone(1), &s, 4, CommRange::INFINITE, 0);
        assert_eq!(out, vec![2]);
    }

    #[test]
    fn range_gate_holds_waypoint() {
        let w = line_world(8);
        let mut s = vec![state(&w, 0, 3, 7)];
        // Previous trajectory ends 1.0 m behind the waypoint: candidate at
        // x = 2.0 is exactly r_c/2 away from it and must not be accepted.
        s[0].prev_trajectory = Some(PiecewiseTrajectory::stationary(Point::new(1.0, 0.0), 10, 5, 0.2, 0).unwrap());
        let d = GoalDistances::new(&w, [7]);
        let out = decentralized_mapp(&w, &d, &everyone(1), &s, 3, CommRange::finite(2.0).unwrap(), 0);
        assert_eq!(out, vec![3]);
        let out = decentralized_mapp(&w, &d, &everyone(1), &s, 3, CommRange::finite(2.01).unwrap(), 0);
        assert_eq!(out, vec![4]);
    }

    #[test]
    fn duplicate_with_blocked_member_reverts_mover() {
        // Agent 1 wants vertex 2 but may not move; PIBT plans it away so agent
        // 0 is proposed onto vertex 2 and must be reverted.
        let w = line_world(5);
        let mut s = vec![state(&w, 0, 1, 4), state(&w, 1, 2, 4)];
        s[1].desired_goal = 3;
        s[1].subgoal = Point::new(0.9, 0.0);
        let d = GoalDistances::new(&w, [4, 3]);
        let out = decentralized_mapp(&w, &d, &everyone(2), &s, 2, CommRange::INFINITE, 0);
        assert_eq!(out, vec![1, 2]);
    }

    /// Exhaustive toy check on a 2×2 grid: for every placement of 3 agents,
    /// goal assignment and gate pattern, the result is pairwise distinct and
    /// each waypoint is either the PIBT proposal or the previous one.
    #[test]
    fn exhaustive_three_agent_toy() {
        let w = GridWorld::new(Point::zero(), 0.5, 2, 2, ObstacleSet::empty(), 0.15).unwrap();
        let verts = [0usize, 1, 2, 3];
        let d = GoalDistances::new(&w, verts);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    if a == b || b == c || a == c {
                        continue;
                    }
                    for goals in 0..64usize {
                        let g = [goals % 4, (goals / 4) % 4, (goals / 16) % 4];
                        for gate in 0..8u32 {
                            let mut s: Vec<AgentPlanState> = [a, b, c]
                                .iter()
                                .enumerate()
                                .map(|(id, &at)| state(&w, id, at, g[id]))
                                .collect();
                            for (id, st) in s.iter_mut().enumerate() {
                                if gate & (1 << id) == 0 {
                                    st.subgoal = st.subgoal + Point::new(0.1, 0.0);
                                }
                            }
                            let pibt_in: Vec<PibtAgent> = s
                                .iter()
                                .map(|st| PibtAgent { id: st.id, at: st.waypoint, goal: st.desired_goal, elapsed: 0 })
                                .collect();
                            let out = decentralized_mapp(&w, &d, &everyone(3), &s, 5, CommRange::INFINITE, 0);
                            let tie = 5u64.wrapping_mul(0xD1B5_4A32_D192_ED03);
                            let proposal = pibt_step(&w, &d, &pibt_in, tie);
                            for i in 0..3 {
                                assert!(out[i] == proposal[i] || out[i] == s[i].waypoint);
                                for j in i + 1..3 {
                                    assert_ne!(out[i], out[j]);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
