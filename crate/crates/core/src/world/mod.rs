//! Grid graph shared by all agents, box obstacles and the procedural
//! scenario generators.

mod forest;
mod maze;
mod scenario;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{distance_to_segment, Aabb};
use crate::{BoundingBox, Point};

pub use forest::{generate_forest, ForestParams};
pub use maze::{generate_maze, MazeLayout, MazeParams};
pub use scenario::{AgentModel, AgentTask, CommRange, EnvKind, Scenario, ScenarioFile};

/// Dense index of a grid vertex: `iy * width + ix`.
pub type VertexId = usize;

/// Tolerance for snapping points onto grid vertices and edges.
pub const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("grid size {grid_size} must exceed 2*sqrt(2)*r = {limit}")]
    GridTooFine { grid_size: f64, limit: f64 },
    #[error("grid must have at least one vertex")]
    EmptyGrid,
    #[error("obstacle {index} has non-positive area")]
    DegenerateObstacle { index: usize },
    #[error("scenario generation failed: {0}")]
    Generation(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("scenario io: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario format: {0}")]
    Format(#[from] serde_json::Error),
}

/// Benchmark scenario for `env` with the default generator parameters.
pub fn generate(env: EnvKind, seed: u64, comm_range: CommRange) -> Result<Scenario, WorldError> {
    let model = AgentModel::default();
    match env {
        EnvKind::Forest => generate_forest(seed, &ForestParams::default(), model, comm_range),
        EnvKind::Sparse => generate_maze(seed, &MazeParams::for_layout(MazeLayout::Sparse), model, comm_range),
        EnvKind::Dense => generate_maze(seed, &MazeParams::for_layout(MazeLayout::Dense), model, comm_range),
        EnvKind::Custom => Err(WorldError::Generation("custom scenarios are loaded from files".into())),
    }
}

/// Union of axis-aligned boxes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObstacleSet {
    boxes: Vec<BoundingBox>,
}

impl ObstacleSet {
    pub fn new(boxes: Vec<BoundingBox>) -> Result<Self, WorldError> {
        if let Some(index) = boxes
            .iter()
            .position(|b| !(b.width() > 0.0 && b.height() > 0.0) || !b.min.is_finite() || !b.max.is_finite())
        {
            return Err(WorldError::DegenerateObstacle { index });
        }
        Ok(ObstacleSet { boxes })
    }

    pub fn empty() -> Self {
        ObstacleSet::default()
    }

    pub fn boxes(&self) -> &[BoundingBox] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Signed distance to the nearest box; infinite for an empty set.
    pub fn signed_distance(&self, p: Point) -> f64 {
        self.boxes
            .iter()
            .map(|b| b.signed_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// True iff the disc of radius `clearance` around `p` misses every box.
    pub fn point_free(&self, p: Point, clearance: f64) -> bool {
        self.boxes.iter().all(|b| b.signed_distance(p) >= clearance)
    }

    /// True iff every point of `region` keeps `clearance` from every box.
    pub fn box_free(&self, region: &BoundingBox, clearance: f64) -> bool {
        self.boxes.iter().all(|b| b.distance_to(region) >= clearance)
    }

    /// Smallest distance from the segment to any box.
    pub fn segment_clearance(&self, a: Point, b: Point) -> f64 {
        let seg = Aabb::new(a.min(b), a.max(b));
        // An axis-aligned segment is its own bounding box, so the box gap is
        // already the exact distance.
        if a.x == b.x || a.y == b.y {
            return self.boxes.iter().map(|o| o.distance_to(&seg)).fold(f64::INFINITY, f64::min);
        }
        self.boxes
            .iter()
            .map(|o| segment_box_distance(a, b, o))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Exact distance between a segment and a box: zero if they meet, otherwise
/// the minimum over the segment endpoints against the box and the box corners
/// against the segment.
fn segment_box_distance(a: Point, b: Point, o: &BoundingBox) -> f64 {
    if o.contains(a, 0.0) || o.contains(b, 0.0) {
        return 0.0;
    }
    let corners = [o.min, Point::new(o.max.x, o.min.y), o.max, Point::new(o.min.x, o.max.y)];
    for i in 0..4 {
        let pair = crate::geom::closest_between_segments(a, b, corners[i], corners[(i + 1) % 4]);
        if pair.distance() == 0.0 {
            return 0.0;
        }
    }
    let mut best = o.signed_distance(a).min(o.signed_distance(b));
    for c in corners {
        best = best.min(distance_to_segment(a, b, c));
    }
    best
}

/// Free-space test used throughout: the disc of radius `clearance` at `p`
/// misses every obstacle.
pub fn point_free(obstacles: &ObstacleSet, p: Point, clearance: f64) -> bool {
    obstacles.point_free(p, clearance)
}

/// 4-connected grid graph with obstacle-aware vertices and edges.
#[derive(Debug, Clone)]
pub struct GridWorld {
    origin: Point,
    grid_size: f64,
    width: usize,
    height: usize,
    agent_radius: f64,
    obstacles: ObstacleSet,
    blocked: Vec<bool>,
    adjacency: Vec<Vec<VertexId>>,
}

impl GridWorld {
    pub fn new(
        origin: Point,
        grid_size: f64,
        width: usize,
        height: usize,
        obstacles: ObstacleSet,
        agent_radius: f64,
    ) -> Result<Self, WorldError> {
        let limit = 2.0 * std::f64::consts::SQRT_2 * agent_radius;
        if !(grid_size > limit) {
            return Err(WorldError::GridTooFine { grid_size, limit });
        }
        if width == 0 || height == 0 {
            return Err(WorldError::EmptyGrid);
        }
        let mut world = GridWorld {
            origin,
            grid_size,
            width,
            height,
            agent_radius,
            obstacles,
            blocked: Vec::new(),
            adjacency: Vec::new(),
        };
        world.rebuild();
        Ok(world)
    }

    fn rebuild(&mut self) {
        let r = self.agent_radius;
        self.blocked = (0..self.vertex_count())
            .map(|v| !self.obstacles.point_free(self.position(v), r))
            .collect();
        let mut adjacency = vec![Vec::with_capacity(4); self.vertex_count()];
        for v in 0..self.vertex_count() {
            if self.blocked[v] {
                continue;
            }
            let (ix, iy) = self.coords(v);
            let mut cands = Vec::with_capacity(4);
            if ix > 0 {
                cands.push(v - 1);
            }
            if ix + 1 < self.width {
                cands.push(v + 1);
            }
            if iy > 0 {
                cands.push(v - self.width);
            }
            if iy + 1 < self.height {
                cands.push(v + self.width);
            }
            cands.sort_unstable();
            for u in cands {
                if !self.blocked[u] && self.obstacles.segment_clearance(self.position(v), self.position(u)) >= r {
                    adjacency[v].push(u);
                }
            }
        }
        self.adjacency = adjacency;
    }

    /// Copy of this grid with one more obstacle.
    pub fn with_obstacle(&self, extra: BoundingBox) -> Result<Self, WorldError> {
        let mut boxes = self.obstacles.boxes().to_vec();
        boxes.push(extra);
        let mut next = self.clone();
        next.obstacles = ObstacleSet::new(boxes)?;
        next.rebuild();
        Ok(next)
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn grid_size(&self) -> f64 {
        self.grid_size
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn agent_radius(&self) -> f64 {
        self.agent_radius
    }

    pub fn obstacles(&self) -> &ObstacleSet {
        &self.obstacles
    }

    pub fn vertex_count(&self) -> usize {
        self.width * self.height
    }

    pub fn coords(&self, v: VertexId) -> (usize, usize) {
        (v % self.width, v / self.width)
    }

    pub fn position(&self, v: VertexId) -> Point {
        let (ix, iy) = self.coords(v);
        self.origin + Point::new(ix as f64 * self.grid_size, iy as f64 * self.grid_size)
    }

    pub fn is_blocked(&self, v: VertexId) -> bool {
        self.blocked[v]
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        self.adjacency[a].contains(&b)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Vertex at `p`, if `p` lies on one within [`GRID_TOL`].
    pub fn vertex_at(&self, p: Point) -> Option<VertexId> {
        let v = self.nearest_vertex(p);
        ((self.position(v) - p).norm_inf() <= GRID_TOL).then_some(v)
    }

    /// Nearest vertex inside the grid extent; ties go to smaller x, then
    /// smaller y.
    pub fn nearest_vertex(&self, p: Point) -> VertexId {
        let snap = |c: f64, o: f64, n: usize| -> usize {
            let f = (c - o) / self.grid_size;
            // round-half-down so exact ties pick the smaller coordinate
            let i = (f - 0.5).ceil();
            i.clamp(0.0, (n - 1) as f64) as usize
        };
        let ix = snap(p.x, self.origin.x, self.width);
        let iy = snap(p.y, self.origin.y, self.height);
        iy * self.width + ix
    }

    /// Box spanned by the vertex extent.
    pub fn workspace(&self) -> BoundingBox {
        Aabb::new(self.origin, self.position(self.vertex_count() - 1))
    }

    /// Hop distances to `goal` over valid edges; `u32::MAX` when unreachable.
    pub fn bfs_distances(&self, goal: VertexId) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertex_count()];
        if self.blocked[goal] {
            return dist;
        }
        let mut queue = VecDeque::from([goal]);
        dist[goal] = 0;
        while let Some(v) = queue.pop_front() {
            for &u in &self.adjacency[v] {
                if dist[u] == u32::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    pub fn connected(&self, a: VertexId, b: VertexId) -> bool {
        self.bfs_distances(b)[a] != u32::MAX
    }

    /// Distance from `p` to the nearest valid grid edge (or isolated free
    /// vertex).
    pub fn distance_to_grid(&self, p: Point) -> f64 {
        let mut best = f64::INFINITY;
        let (ix, iy) = self.coords(self.nearest_vertex(p));
        let lo_x = ix.saturating_sub(1);
        let lo_y = iy.saturating_sub(1);
        for y in lo_y..(iy + 2).min(self.height) {
            for x in lo_x..(ix + 2).min(self.width) {
                let v = y * self.width + x;
                if self.blocked[v] {
                    continue;
                }
                let a = self.position(v);
                best = best.min((a - p).norm());
                for &u in &self.adjacency[v] {
                    best = best.min(distance_to_segment(a, self.position(u), p));
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_grid(n: usize) -> GridWorld {
        GridWorld::new(Point::new(0.0, 0.0), 0.5, n, n, ObstacleSet::empty(), 0.15).unwrap()
    }

    #[test]
    fn empty_world_is_free_everywhere() {
        let obs = ObstacleSet::empty();
        assert!(point_free(&obs, Point::new(1e6, -3.0), 10.0));
    }

    #[test]
    fn box_center_is_never_free() {
        let obs = ObstacleSet::new(vec![Aabb::new(Point::new(0.0, 0.0), Point::new(1.0, 2.0))]).unwrap();
        assert!(!point_free(&obs, Point::new(0.5, 1.0), 0.0));
        assert!(!point_free(&obs, Point::new(0.5, 1.0), 0.3));
    }

    #[test]
    fn clearance_boundary() {
        let obs = ObstacleSet::new(vec![Aabb::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0))]).unwrap();
        let r = 0.15;
        let eps = 1e-6;
        assert!(point_free(&obs, Point::new(1.0 + r + eps, 0.5), r));
        assert!(!point_free(&obs, Point::new(1.0 + r - eps, 0.5), r));
        // Off a corner the distance is Euclidean.
        let diag = (r + eps) / 2f64.sqrt();
        assert!(point_free(&obs, Point::new(1.0 + diag, 1.0 + diag), r));
        let diag = (r - eps) / 2f64.sqrt();
        assert!(!point_free(&obs, Point::new(1.0 + diag, 1.0 + diag), r));
    }

    #[test]
    fn rejects_fine_grid() {
        let err = GridWorld::new(Point::zero(), 0.42, 3, 3, ObstacleSet::empty(), 0.15).unwrap_err();
        assert!(matches!(err, WorldError::GridTooFine { .. }));
    }

    #[test]
    fn open_grid_has_all_edges() {
        let g = open_grid(4);
        assert_eq!(g.edge_count(), 2 * 4 * 3);
        assert_eq!(g.neighbors(5), &[1, 4, 6, 9]);
        assert_eq!(g.bfs_distances(0)[15], 6);
    }

    #[test]
    fn wall_cuts_edges_and_blocks_vertices() {
        let wall = Aabb::new(Point::new(0.7, -1.0), Point::new(0.8, 0.6));
        let g = GridWorld::new(Point::zero(), 0.5, 4, 3, ObstacleSet::new(vec![wall]).unwrap(), 0.15).unwrap();
        // Vertices at x=0.5 sit 0.2 from the wall and stay free; the edges
        // from x=0.5 to x=1.0 cross it.
        assert!(!g.is_blocked(1));
        assert!(!g.has_edge(1, 2));
        assert!(!g.has_edge(5, 6));
        assert!(g.has_edge(9, 10));
        assert!(g.connected(0, 3));
    }

    #[test]
    fn nearest_vertex_ties_prefer_smaller_coordinates() {
        let g = open_grid(5);
        assert_eq!(g.nearest_vertex(Point::new(0.25, 0.25)), 0);
        assert_eq!(g.nearest_vertex(Point::new(0.26, 0.75)), g.width() * 1 + 1);
        assert_eq!(g.nearest_vertex(Point::new(-3.0, 9.0)), 20);
        assert_eq!(g.vertex_at(Point::new(1.0, 0.5)), Some(7));
        assert_eq!(g.vertex_at(Point::new(1.0, 0.51)), None);
    }

    #[test]
    fn distance_to_grid_on_and_off_edges() {
        let g = open_grid(3);
        assert!(g.distance_to_grid(Point::new(0.3, 0.5)) < 1e-12);
        assert!((g.distance_to_grid(Point::new(0.25, 0.25)) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn diagonal_segment_clearance() {
        let obs = ObstacleSet::new(vec![Aabb::new(Point::new(1.0, 0.0), Point::new(2.0, 1.0))]).unwrap();
        let d = obs.segment_clearance(Point::new(0.0, 1.0), Point::new(1.0, 2.0));
        assert!((d - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(obs.segment_clearance(Point::new(0.0, 0.0), Point::new(3.0, 1.0)), 0.0);
    }
}
