use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AgentModel, AgentTask, CommRange, EnvKind, GridWorld, ObstacleSet, Scenario, WorldError};
use crate::{BoundingBox, Point};

/// Random square obstacles around agents placed on a circle.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_obstacles: usize,
    pub n_agents: usize,
    pub circle_radius: f64,
    /// Grid spans `[-half_extent, half_extent]` on both axes.
    pub half_extent: f64,
    pub grid_size: f64,
    pub side_min: f64,
    pub side_max: f64,
    /// Obstacle centres are drawn from `[-c, c]²`.
    pub centre_extent: f64,
    pub max_retries: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_obstacles: 40,
            n_agents: 10,
            circle_radius: 4.0,
            half_extent: 5.0,
            grid_size: 0.5,
            side_min: 0.3,
            side_max: 0.6,
            centre_extent: 3.5,
            max_retries: 1000,
        }
    }
}

pub fn generate_forest(
    seed: u64,
    params: &ForestParams,
    model: AgentModel,
    comm_range: CommRange,
) -> Result<Scenario, WorldError> {
    let cells = (2.0 * params.half_extent / params.grid_size).round() as usize;
    let origin = Point::new(-params.half_extent, -params.half_extent);
    let mut world = GridWorld::new(origin, params.grid_size, cells + 1, cells + 1, ObstacleSet::empty(), model.radius)?;

    let agents: Vec<AgentTask> = (0..params.n_agents)
        .map(|i| {
            let theta = TAU * i as f64 / params.n_agents as f64;
            let p = Point::new(theta.cos(), theta.sin()) * params.circle_radius;
            AgentTask {
                start: world.nearest_vertex(p),
                goal: world.nearest_vertex(-p),
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for placed in 0..params.n_obstacles {
        let mut accepted = None;
        for _ in 0..params.max_retries {
            let side = rng.gen_range(params.side_min..=params.side_max);
            let c = Point::new(
                rng.gen_range(-params.centre_extent..=params.centre_extent),
                rng.gen_range(-params.centre_extent..=params.centre_extent),
            );
            let candidate = world.with_obstacle(BoundingBox::from_center(c, Point::splat(side / 2.0)))?;
            let ok = agents.iter().all(|a| {
                !candidate.is_blocked(a.start) && !candidate.is_blocked(a.goal) && candidate.connected(a.start, a.goal)
            });
            if ok {
                accepted = Some(candidate);
                break;
            }
        }
        world = accepted.ok_or_else(|| {
            WorldError::Generation(format!(
                "obstacle {placed} not placed after {} attempts",
                params.max_retries
            ))
        })?;
    }
    Scenario::new(EnvKind::Forest, world, agents, model, comm_range, seed)
}
