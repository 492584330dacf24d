//! Communication groups: connected components of the L∞ range graph.

use serde::{Deserialize, Serialize};

use crate::world::CommRange;
use crate::Point;

pub type AgentId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectedGroup {
    /// Ascending agent ids.
    pub members: Vec<AgentId>,
    pub coordinator: AgentId,
}

impl ConnectedGroup {
    pub fn contains(&self, id: AgentId) -> bool {
        self.members.binary_search(&id).is_ok()
    }
}

/// True iff `a` and `b` can talk directly (inclusive at the range boundary).
pub fn in_range(a: Point, b: Point, range: CommRange) -> bool {
    range.is_infinite() || (a - b).norm_inf() <= range.metres()
}

/// Groups ordered by their smallest member; the coordinator is that member.
pub fn build_groups(positions: &[Point], range: CommRange) -> Vec<ConnectedGroup> {
    let n = positions.len();
    if range.is_infinite() {
        return if n == 0 {
            Vec::new()
        } else {
            vec![ConnectedGroup {
                members: (0..n).collect(),
                coordinator: 0,
            }]
        };
    }
    let mut label = vec![usize::MAX; n];
    let mut groups = Vec::new();
    for seed in 0..n {
        if label[seed] != usize::MAX {
            continue;
        }
        let gid = groups.len();
        label[seed] = gid;
        let mut stack = vec![seed];
        let mut members = vec![seed];
        while let Some(a) = stack.pop() {
            for b in 0..n {
                if label[b] == usize::MAX && in_range(positions[a], positions[b], range) {
                    label[b] = gid;
                    members.push(b);
                    stack.push(b);
                }
            }
        }
        members.sort_unstable();
        groups.push(ConnectedGroup {
            coordinator: members[0],
            members,
        });
    }
    groups
}

/// Group index of every agent.
pub fn group_of(groups: &[ConnectedGroup], n_agents: usize) -> Vec<usize> {
    let mut out = vec![usize::MAX; n_agents];
    for (g, grp) in groups.iter().enumerate() {
        for &m in &grp.members {
            out[m] = g;
        }
    }
    out
}
