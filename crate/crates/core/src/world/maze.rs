use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AgentModel, AgentTask, CommRange, EnvKind, GridWorld, ObstacleSet, Scenario, WorldError};
use crate::{BoundingBox, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MazeLayout {
    /// 6 × 6 cells of 1.0 m.
    Sparse,
    /// 9 × 9 cells of 0.5 m.
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MazeParams {
    pub cells: usize,
    pub cell_size: f64,
    pub wall_thickness: f64,
    pub grid_size: f64,
    /// Vertex columns of open floor outside each entrance.
    pub staging_columns: usize,
    pub n_agents: usize,
}

impl MazeParams {
    pub fn for_layout(layout: MazeLayout) -> Self {
        let (cells, cell_size) = match layout {
            MazeLayout::Sparse => (6, 1.0),
            MazeLayout::Dense => (9, 0.5),
        };
        MazeParams {
            cells,
            cell_size,
            wall_thickness: 0.1,
            grid_size: 0.5,
            staging_columns: 3,
            n_agents: 10,
        }
    }

    fn side(&self) -> f64 {
        self.cells as f64 * self.cell_size
    }

    /// Row holding both entrances.
    pub fn entrance_row(&self) -> usize {
        self.cells / 2
    }
}

/// Passages of a perfect maze as pairs of cell indices `(cy * cells + cx)`,
/// carved by randomized Prim from a random root cell.
pub fn prim_passages(cells: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let n = cells * cells;
    let mut in_maze = vec![false; n];
    let mut frontier: Vec<(usize, usize)> = Vec::new();
    let mut passages = Vec::with_capacity(n.saturating_sub(1));
    let push_walls = |c: usize, frontier: &mut Vec<(usize, usize)>, in_maze: &[bool]| {
        let (x, y) = (c % cells, c / cells);
        let mut next = Vec::with_capacity(4);
        if x > 0 {
            next.push(c - 1);
        }
        if x + 1 < cells {
            next.push(c + 1);
        }
        if y > 0 {
            next.push(c - cells);
        }
        if y + 1 < cells {
            next.push(c + cells);
        }
        frontier.extend(next.into_iter().filter(|&o| !in_maze[o]).map(|o| (c, o)));
    };
    if n == 0 {
        return passages;
    }
    let root = rng.gen_range(0..n);
    in_maze[root] = true;
    push_walls(root, &mut frontier, &in_maze);
    while !frontier.is_empty() {
        let (from, to) = frontier.swap_remove(rng.gen_range(0..frontier.len()));
        if in_maze[to] {
            continue;
        }
        in_maze[to] = true;
        passages.push((from.min(to), from.max(to)));
        push_walls(to, &mut frontier, &in_maze);
    }
    passages
}

fn wall_boxes(params: &MazeParams, passages: &[(usize, usize)]) -> Vec<BoundingBox> {
    let c = params.cells;
    let cs = params.cell_size;
    let h = params.wall_thickness / 2.0;
    let open = |a: usize, b: usize| passages.binary_search(&(a.min(b), a.max(b))).is_ok();
    // Wall on the vertical line x = i·cs spanning cell row j, and on the
    // horizontal line y = j·cs spanning cell column i.
    let vertical = |i: usize, j: usize| {
        let x = i as f64 * cs;
        BoundingBox::new(Point::new(x - h, j as f64 * cs - h), Point::new(x + h, (j + 1) as f64 * cs + h))
    };
    let horizontal = |i: usize, j: usize| {
        let y = j as f64 * cs;
        BoundingBox::new(Point::new(i as f64 * cs - h, y - h), Point::new((i + 1) as f64 * cs + h, y + h))
    };
    let mut boxes = Vec::new();
    for j in 0..c {
        for i in 0..=c {
            let outer = i == 0 || i == c;
            let keep = if outer {
                j != params.entrance_row()
            } else {
                !open(j * c + i - 1, j * c + i)
            };
            if keep {
                boxes.push(vertical(i, j));
            }
        }
    }
    for j in 0..=c {
        for i in 0..c {
            let outer = j == 0 || j == c;
            if outer || !open((j - 1) * c + i, j * c + i) {
                boxes.push(horizontal(i, j));
            }
        }
    }
    boxes
}

pub fn generate_maze(
    seed: u64,
    params: &MazeParams,
    model: AgentModel,
    comm_range: CommRange,
) -> Result<Scenario, WorldError> {
    let d = params.grid_size;
    let inner = (params.side() / d).round() as usize;
    if ((inner as f64) * d - params.side()).abs() > 1e-9 || params.n_agents % 2 != 0 {
        return Err(WorldError::Generation(
            "maze side must be a multiple of the grid size and agents must split evenly".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passages = prim_passages(params.cells, &mut rng);
    passages.sort_unstable();
    let obstacles = ObstacleSet::new(wall_boxes(params, &passages))?;

    let s = params.staging_columns;
    let origin = Point::new(-(s as f64 - 0.5) * d, 0.5 * d);
    let world = GridWorld::new(origin, d, inner + 2 * s, inner, obstacles, model.radius)?;

    let entrance = Point::new(0.0, (params.entrance_row() as f64 + 0.5) * params.cell_size);
    let mut west: Vec<usize> = (0..world.vertex_count())
        .filter(|&v| world.coords(v).0 < s && !world.is_blocked(v))
        .collect();
    let key = |v: usize| {
        let p = world.position(v);
        ((p - entrance).norm(), p.x, p.y)
    };
    west.sort_by(|&a, &b| key(a).partial_cmp(&key(b)).expect("finite positions"));
    let per_side = params.n_agents / 2;
    if west.len() < per_side {
        return Err(WorldError::Generation("staging area too small".into()));
    }
    let mirror = |v: usize| {
        let p = world.position(v);
        world
            .vertex_at(Point::new(params.side() - p.x, p.y))
            .expect("staging grid is mirror symmetric")
    };
    let mut agents: Vec<AgentTask> = west[..per_side]
        .iter()
        .map(|&v| AgentTask { start: v, goal: mirror(v) })
        .collect();
    agents.extend(west[..per_side].iter().map(|&v| AgentTask { start: mirror(v), goal: v }));
    let env = if params.cell_size >= 1.0 { EnvKind::Sparse } else { EnvKind::Dense };
    Scenario::new(env, world, agents, model, comm_range, seed)
}
