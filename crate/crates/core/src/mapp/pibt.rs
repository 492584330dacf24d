//! One step of Priority Inheritance with Backtracking.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::network::AgentId;
use crate::world::{GridWorld, VertexId};

/// BFS hop tables keyed by goal vertex.
#[derive(Debug, Clone, Default)]
pub struct GoalDistances {
    tables: HashMap<VertexId, Vec<u32>>,
}

impl GoalDistances {
    pub fn new(world: &GridWorld, goals: impl IntoIterator<Item = VertexId>) -> Self {
        let mut tables = HashMap::new();
        for g in goals {
            tables.entry(g).or_insert_with(|| world.bfs_distances(g));
        }
        GoalDistances { tables }
    }

    /// Panics if `goal` was not registered at construction.
    pub fn get(&self, goal: VertexId) -> &[u32] {
        self.tables.get(&goal).expect("distance table for goal")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PibtAgent {
    pub id: AgentId,
    pub at: VertexId,
    pub goal: VertexId,
    /// Steps since the agent last stood on its goal.
    pub elapsed: u64,
}

/// Planning order: longer time away from goal first, then smaller id.
fn priority_order(a: &PibtAgent, b: &PibtAgent) -> Ordering {
    b.elapsed.cmp(&a.elapsed).then(a.id.cmp(&b.id))
}

struct Solver<'a> {
    world: &'a GridWorld,
    dist: &'a GoalDistances,
    agents: &'a [PibtAgent],
    occupied_now: HashMap<VertexId, usize>,
    occupied_next: HashMap<VertexId, usize>,
    next: Vec<Option<VertexId>>,
    rng: ChaCha8Rng,
}

impl Solver<'_> {
    fn plan(&mut self, a: usize, parent: Option<usize>) -> bool {
        let agent = self.agents[a];
        let table = self.dist.get(agent.goal);
        let mut cands: Vec<VertexId> = self.world.neighbors(agent.at).to_vec();
        cands.push(agent.at);
        // Shuffle before the stable sort so equal-cost candidates are tried in
        // seeded random order; fixed orders can trap two agents in a loop.
        cands.shuffle(&mut self.rng);
        cands.sort_by_key(|&v| table[v]);
        for v in cands {
            if self.occupied_next.contains_key(&v) {
                continue;
            }
            if parent.is_some_and(|p| self.agents[p].at == v) {
                continue;
            }
            self.occupied_next.insert(v, a);
            self.next[a] = Some(v);
            if let Some(&c) = self.occupied_now.get(&v) {
                if c != a && self.next[c].is_none() && !self.plan(c, Some(a)) {
                    continue;
                }
            }
            return true;
        }
        self.next[a] = Some(agent.at);
        self.occupied_next.insert(agent.at, a);
        false
    }
}

/// Next vertex for every agent (same order as `agents`). Moves follow grid
/// edges or stay, with no two agents on one vertex and no swaps. Ties between
/// equally good candidates are broken by a generator seeded with `tie_seed`.
///
/// Panics if two agents share a start vertex.
pub fn pibt_step(world: &GridWorld, dist: &GoalDistances, agents: &[PibtAgent], tie_seed: u64) -> Vec<VertexId> {
    let mut occupied_now = HashMap::with_capacity(agents.len());
    for (i, a) in agents.iter().enumerate() {
        assert!(occupied_now.insert(a.at, i).is_none(), "agents share start vertex {}", a.at);
    }
    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.sort_by(|&i, &j| priority_order(&agents[i], &agents[j]));
    let mut solver = Solver {
        world,
        dist,
        agents,
        occupied_now,
        occupied_next: HashMap::with_capacity(agents.len()),
        next: vec![None; agents.len()],
        rng: ChaCha8Rng::seed_from_u64(tie_seed),
    };
    for i in order {
        if solver.next[i].is_none() {
            solver.plan(i, None);
        }
    }
    solver.next.into_iter().map(|v| v.expect("every agent planned")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;
    use crate::world::ObstacleSet;
    use crate::Point;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(w: usize, h: usize, blocks: &[(usize, usize)]) -> GridWorld {
        let boxes = blocks
            .iter()
            .map(|&(x, y)| {
                let c = Point::new(x as f64 * 0.5, y as f64 * 0.5);
                Aabb::from_center(c, Point::splat(0.1))
            })
            .collect();
        GridWorld::new(Point::zero(), 0.5, w, h, ObstacleSet::new(boxes).unwrap(), 0.15).unwrap()
    }

    fn agents(list: &[(usize, usize, u64)]) -> Vec<PibtAgent> {
        list.iter()
            .enumerate()
            .map(|(id, &(at, goal, elapsed))| PibtAgent { id, at, goal, elapsed })
            .collect()
    }

    /// Conflict checker: legal moves, distinct targets, no swaps.
    fn valid_joint_move(world: &GridWorld, from: &[VertexId], to: &[VertexId]) -> Result<(), String> {
        for i in 0..from.len() {
            if from[i] != to[i] && !world.has_edge(from[i], to[i]) {
                return Err(format!("agent {i} jumps {}→{}", from[i], to[i]));
            }
            for j in i + 1..from.len() {
                if to[i] == to[j] {
                    return Err(format!("vertex conflict {i},{j} at {}", to[i]));
                }
                if to[i] == from[j] && to[j] == from[i] {
                    return Err(format!("swap conflict {i},{j}"));
                }
            }
        }
        Ok(())
    }

    #[test]
    fn single_agent_steps_to_adjacent_goal() {
        let w = grid(3, 3, &[]);
        let ag = agents(&[(4, 5, 0)]);
        let d = GoalDistances::new(&w, [5]);
        assert_eq!(pibt_step(&w, &d, &ag, 0), vec![5]);
    }

    #[test]
    fn agent_at_goal_stays() {
        let w = grid(3, 3, &[]);
        let ag = agents(&[(4, 4, 0)]);
        let d = GoalDistances::new(&w, [4]);
        assert_eq!(pibt_step(&w, &d, &ag, 0), vec![4]);
    }

    /// Every conflict-free joint one-step move, by brute force.
    fn all_joint_moves(world: &GridWorld, from: &[VertexId]) -> Vec<Vec<VertexId>> {
        let options: Vec<Vec<VertexId>> = from
            .iter()
            .map(|&v| {
                let mut o = world.neighbors(v).to_vec();
                o.push(v);
                o
            })
            .collect();
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(i: usize, options: &[Vec<VertexId>], cur: &mut Vec<VertexId>, out: &mut Vec<Vec<VertexId>>) {
            if i == options.len() {
                out.push(cur.clone());
                return;
            }
            for &v in &options[i] {
                cur.push(v);
                rec(i + 1, options, cur, out);
                cur.pop();
            }
        }
        rec(0, &options, &mut cur, &mut out);
        out.retain(|to| valid_joint_move(world, from, to).is_ok());
        out
    }

    #[test]
    fn head_on_corridor_with_side_pocket() {
        // Corridor along y=0 with a single pocket above x=1.
        let mut blocks = Vec::new();
        for x in 0..5 {
            if x != 1 {
                blocks.push((x, 1));
            }
        }
        let w = grid(5, 2, &blocks);
        let ag = agents(&[(1, 4, 3), (2, 0, 0)]);
        let d = GoalDistances::new(&w, [4, 0]);
        let from: Vec<_> = ag.iter().map(|a| a.at).collect();
        let to = pibt_step(&w, &d, &ag, 0);
        assert!(all_joint_moves(&w, &from).contains(&to));
        assert_eq!(to[0], 2, "higher priority agent advances");
        assert_eq!(to[1], 3, "pushed agent retreats");
    }

    #[test]
    fn random_instances_conflict_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let blocks: Vec<(usize, usize)> =
                (0..8).map(|_| (rng.gen_range(0..8), rng.gen_range(0..8))).collect();
            let w = grid(8, 8, &blocks);
            let mut free: Vec<VertexId> = (0..64).filter(|&v| !w.is_blocked(v)).collect();
            free.shuffle(&mut rng);
            let starts = &free[..6];
            let mut goals = free.clone();
            goals.shuffle(&mut rng);
            let ag: Vec<PibtAgent> = (0..6)
                .map(|id| PibtAgent { id, at: starts[id], goal: goals[id], elapsed: rng.gen_range(0..4) })
                .collect();
            let d = GoalDistances::new(&w, ag.iter().map(|a| a.goal));
            let to = pibt_step(&w, &d, &ag, 0);
            if let Err(e) = valid_joint_move(&w, starts, &to) {
                panic!("{e}");
            }
        }
    }

    #[test]
    fn open_grid_reachability() {
        let w = grid(6, 6, &[]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let mut cells: Vec<VertexId> = (0..36).collect();
            cells.shuffle(&mut rng);
            let goals: Vec<VertexId> = cells[..8].to_vec();
            cells.shuffle(&mut rng);
            let mut ag: Vec<PibtAgent> = (0..8)
                .map(|id| PibtAgent { id, at: cells[id], goal: goals[id], elapsed: 0 })
                .collect();
            let d = GoalDistances::new(&w, goals.iter().copied());
            let limit = w.vertex_count() * ag.len();
            let mut steps = 0;
            while ag.iter().any(|a| a.at != a.goal) {
                assert!(steps < limit, "not all agents reached goals: {ag:?}");
                let to = pibt_step(&w, &d, &ag, steps as u64);
                for (a, v) in ag.iter_mut().zip(to) {
                    a.at = v;
                    a.elapsed = if v == a.goal { 0 } else { a.elapsed + 1 };
                }
                steps += 1;
            }
        }
    }
}
