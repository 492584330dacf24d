use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{GridWorld, ObstacleSet, VertexId, WorldError};
use crate::{BoundingBox, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Forest,
    Sparse,
    Dense,
    Custom,
}

impl EnvKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvKind::Forest => "forest",
            EnvKind::Sparse => "sparse",
            EnvKind::Dense => "dense",
            EnvKind::Custom => "custom",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forest" => Ok(EnvKind::Forest),
            "sparse" | "sparse_maze" => Ok(EnvKind::Sparse),
            "dense" | "dense_maze" => Ok(EnvKind::Dense),
            "custom" => Ok(EnvKind::Custom),
            other => Err(format!("unknown environment `{other}` (expected forest, sparse or dense)")),
        }
    }
}

/// Communication range in metres; `inf` means every agent hears every other.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CommRange(f64);

impl CommRange {
    pub const INFINITE: CommRange = CommRange(f64::INFINITY);

    pub fn finite(metres: f64) -> Result<Self, String> {
        if metres.is_finite() && metres > 0.0 {
            Ok(CommRange(metres))
        } else {
            Err(format!("communication range must be positive, got {metres}"))
        }
    }

    pub fn metres(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl fmt::Display for CommRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for CommRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "∞" => Ok(CommRange::INFINITE),
            t => CommRange::finite(t.parse::<f64>().map_err(|e| format!("bad communication range `{t}`: {e}"))?),
        }
    }
}

impl Serialize for CommRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for CommRange {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => CommRange::finite(v),
            Raw::Text(t) => t.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Physical limits shared by every agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentModel {
    pub radius: f64,
    pub v_max: f64,
    pub a_max: f64,
}

impl Default for AgentModel {
    fn default() -> Self {
        AgentModel {
            radius: 0.15,
            v_max: 1.0,
            a_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentTask {
    pub start: VertexId,
    pub goal: VertexId,
}

/// A validated planning problem.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub env: EnvKind,
    pub world: GridWorld,
    pub agents: Vec<AgentTask>,
    pub model: AgentModel,
    pub comm_range: CommRange,
    pub seed: u64,
}

impl Scenario {
    pub fn new(
        env: EnvKind,
        world: GridWorld,
        agents: Vec<AgentTask>,
        model: AgentModel,
        comm_range: CommRange,
        seed: u64,
    ) -> Result<Self, WorldError> {
        let s = Scenario {
            env,
            world,
            agents,
            model,
            comm_range,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: String| Err(WorldError::InvalidScenario(m));
        let w = &self.world;
        if (w.agent_radius() - self.model.radius).abs() > 0.0 {
            return bad("grid built for a different agent radius".into());
        }
        if !(self.model.v_max > 0.0 && self.model.a_max > 0.0) {
            return bad("v_max and a_max must be positive".into());
        }
        if !self.comm_range.is_infinite() && !(self.comm_range.metres() > 2.0 * w.grid_size()) {
            return bad(format!(
                "communication range {} must exceed twice the grid size {}",
                self.comm_range,
                w.grid_size()
            ));
        }
        for (i, a) in self.agents.iter().enumerate() {
            for (what, v) in [("start", a.start), ("goal", a.goal)] {
                if v >= w.vertex_count() {
                    return bad(format!("agent {i} {what} outside the grid"));
                }
                if w.is_blocked(v) {
                    return bad(format!("agent {i} {what} vertex is blocked"));
                }
            }
            if !w.connected(a.start, a.goal) {
                return bad(format!("agent {i} goal unreachable on the grid"));
            }
        }
        let min_sep = 2.0 * self.model.radius;
        for i in 0..self.agents.len() {
            for j in i + 1..self.agents.len() {
                let (a, b) = (&self.agents[i], &self.agents[j]);
                if (w.position(a.start) - w.position(b.start)).norm() < min_sep {
                    return bad(format!("agents {i} and {j} start closer than 2r"));
                }
                if a.goal == b.goal {
                    return bad(format!("agents {i} and {j} share a goal"));
                }
            }
        }
        Ok(())
    }

    /// Same scenario under a different communication range.
    pub fn with_comm_range(mut self, range: CommRange) -> Result<Self, WorldError> {
        self.comm_range = range;
        self.validate()?;
        Ok(self)
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn start(&self, i: usize) -> Point {
        self.world.position(self.agents[i].start)
    }

    pub fn goal(&self, i: usize) -> Point {
        self.world.position(self.agents[i].goal)
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            env: self.env,
            grid_size: self.world.grid_size(),
            origin: self.world.origin(),
            width: self.world.width(),
            height: self.world.height(),
            agent_radius: self.model.radius,
            comm_range: self.comm_range,
            v_max: self.model.v_max,
            a_max: self.model.a_max,
            seed: self.seed,
            obstacles: self.world.obstacles().boxes().to_vec(),
            agents: (0..self.agents.len())
                .map(|i| AgentEntry {
                    start: self.start(i),
                    goal: self.goal(i),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &ScenarioFile) -> Result<Self, WorldError> {
        let model = AgentModel {
            radius: file.agent_radius,
            v_max: file.v_max,
            a_max: file.a_max,
        };
        let world = GridWorld::new(
            file.origin,
            file.grid_size,
            file.width,
            file.height,
            ObstacleSet::new(file.obstacles.clone())?,
            model.radius,
        )?;
        let snap = |i: usize, what: &str, p: Point| {
            world
                .vertex_at(p)
                .ok_or_else(|| WorldError::InvalidScenario(format!("agent {i} {what} {p:?} is not a grid vertex")))
        };
        let agents = file
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                Ok(AgentTask {
                    start: snap(i, "start", a.start)?,
                    goal: snap(i, "goal", a.goal)?,
                })
            })
            .collect::<Result<Vec<_>, WorldError>>()?;
        Scenario::new(file.env, world, agents, model, file.comm_range, file.seed)
    }

    pub fn load(path: &Path) -> Result<Self, WorldError> {
        let text = std::fs::read_to_string(path)?;
        let file: ScenarioFile = serde_json::from_str(&text)?;
        Scenario::from_file(&file)
    }

    pub fn save(&self, path: &Path) -> Result<(), WorldError> {
        let mut text = serde_json::to_string_pretty(&self.to_file())?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentEntry {
    pub start: Point,
    pub goal: Point,
}

/// On-disk scenario; lengths in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "custom_env")]
    pub env: EnvKind,
    pub grid_size: f64,
    pub origin: Point,
    pub width: usize,
    pub height: usize,
    pub agent_radius: f64,
    pub comm_range: CommRange,
    pub v_max: f64,
    pub a_max: f64,
    pub seed: u64,
    pub obstacles: Vec<BoundingBox>,
    pub agents: Vec<AgentEntry>,
}

fn custom_env() -> EnvKind {
    EnvKind::Custom
}
