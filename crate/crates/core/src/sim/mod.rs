//! Lockstep replanning loop, per-step monitors, step log and benchmark
//! aggregation.
//!
//! Agents track their committed trajectories exactly, so the position at tick
//! `k` is the start of the first segment of the plan made at `k - 1`.

pub mod bench;
pub mod log;
pub mod monitor;

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bernstein::TrajectoryRecord;
use crate::corridors::{build_lsc, build_sfcs, initial_trajectory, CorridorError, HalfPlane, SfcBuilder};
use crate::mapp::{decentralized_mapp, AgentPlanState, GoalDistances};
use crate::network::{build_groups, group_of, AgentId};
use crate::optimize::{
    assemble_qp, kkt_report, optimize_subgoal, qp, solve_qp, trajectory_from_solution, AgentQpInput, OptimizeError,
    PlannerParams, QpError, QpProblem, QpTemplate, SubgoalProblem,
};
use crate::world::{Scenario, WorldError};
use crate::{Point, Polytope, Trajectory};

pub use bench::{aggregate, benchmark, write_csv, BenchReport, BenchRow, TrialResult};
pub use log::{read_log, write_record, AgentStepRecord, StepRecord};
pub use monitor::{
    monitor_step, subgoal_on_edge, MonitorReport, StagnationTracker, StepSnapshot, Violation, ViolationKind,
    GEOMETRY_TOL, SAFETY_TOL,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error("log io: {0}")]
    Io(#[from] std::io::Error),
    #[error("log format: {0}")]
    Format(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Simulator settings. Agent radius and dynamic limits come from the
/// scenario's agent model; the communication range from the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Replanning period and segment duration (s).
    pub dt: f64,
    pub segments: usize,
    pub degree: usize,
    pub w_err: f64,
    pub w_der: f64,
    pub timeout_s: f64,
    /// Radius of the goal ball used for arrival (m).
    pub arrival_tol: f64,
    /// Clean ticks required after everyone arrives.
    pub settle_ticks: u64,
    pub samples_per_segment: usize,
    /// Steps an unchanged (position, subgoal, waypoint) triple may persist.
    pub stagnation_limit: u64,
    /// Seeds PIBT tie-breaking.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let dt = 0.2;
        let timeout_s = 60.0;
        SimConfig {
            dt,
            segments: 10,
            degree: 5,
            w_err: 1.0,
            w_der: 0.01,
            timeout_s,
            arrival_tol: 0.05,
            settle_ticks: 5,
            samples_per_segment: 20,
            stagnation_limit: (timeout_s / dt).ceil() as u64,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.into()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if self.segments == 0 {
            return bad("at least one segment is required");
        }
        if self.degree < crate::bernstein::MIN_DEGREE {
            return bad("degree must be at least 5");
        }
        if !(self.w_err > 0.0 && self.w_der > 0.0) {
            return bad("objective weights must be positive");
        }
        if !(self.timeout_s > 0.0 && self.arrival_tol >= 0.0) {
            return bad("timeout must be positive and arrival tolerance non-negative");
        }
        if self.samples_per_segment < 2 {
            return bad("at least two samples per segment");
        }
        Ok(())
    }

    /// Last tick at which an arrival still counts.
    pub fn max_steps(&self) -> u64 {
        (self.timeout_s / self.dt + 1e-9).floor() as u64
    }

    pub fn planner_params(&self, scenario: &Scenario) -> PlannerParams {
        PlannerParams {
            segments: self.segments,
            degree: self.degree,
            dt: self.dt,
            w_err: self.w_err,
            w_der: self.w_der,
            v_max: scenario.model.v_max,
            a_max: scenario.model.a_max,
            radius: scenario.model.radius,
            comm_range: scenario.comm_range,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Violation(ViolationKind),
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub success: bool,
    pub outcome: Outcome,
    /// Time at which the last agent arrived for good; `None` unless successful.
    pub flight_time_s: Option<f64>,
    /// Mean travelled arc length per agent (m).
    pub flight_distance_m: f64,
    /// Mean per-agent planning time per step (ms).
    pub compute_ms: f64,
    /// Ticks planned.
    pub steps: u64,
    pub min_pair_distance: f64,
    pub min_clearance: f64,
    /// Longest run of an unchanged state triple seen for any agent.
    pub max_stagnation: u64,
    /// Largest KKT residual over all solves.
    pub max_kkt_residual: f64,
    pub violations: Vec<Violation>,
}

/// Per-agent result of one planning tick.
struct AgentPlan {
    subgoal: Point,
    trajectory: Trajectory,
    kkt: f64,
    nanos: u128,
    problem: Option<QpProblem>,
}

/// Receives every trajectory QP of a run as `(step, agent, problem)`, in
/// step order and then agent order, after the problem has been solved.
pub type QpObserver<'a> = &'a mut dyn FnMut(u64, AgentId, &QpProblem);

struct PlanFailure {
    kind: ViolationKind,
    value: f64,
    detail: String,
}

impl From<CorridorError> for PlanFailure {
    fn from(e: CorridorError) -> Self {
        let (kind, value) = match &e {
            CorridorError::PairTooClose { distance, .. } => (ViolationKind::SeparationInfeasible, *distance),
            _ => (ViolationKind::CorridorInfeasible, 0.0),
        };
        PlanFailure { kind, value, detail: e.to_string() }
    }
}

impl From<OptimizeError> for PlanFailure {
    fn from(e: OptimizeError) -> Self {
        let (kind, value) = match &e {
            OptimizeError::SubgoalInfeasible { shortfall, .. } => (ViolationKind::SubgoalInfeasible, *shortfall),
            OptimizeError::Qp(QpError::Infeasible { violation, .. }) => (ViolationKind::WarmStartInfeasible, *violation),
            OptimizeError::Qp(QpError::StartOffManifold { residual }) => (ViolationKind::WarmStartInfeasible, *residual),
            _ => (ViolationKind::SolverFailure, 0.0),
        };
        PlanFailure { kind, value, detail: e.to_string() }
    }
}

fn check_halfplanes(points: &[Point], hs: impl Fn(usize) -> HalfPlane<f64>) -> Option<f64> {
    let worst = points
        .iter()
        .enumerate()
        .map(|(idx, &p)| -hs(idx).slack(p))
        .fold(f64::NEG_INFINITY, f64::max);
    (worst > GEOMETRY_TOL).then_some(worst)
}

/// Runs `scenario` to success, violation or timeout, writing one JSON line
/// per tick to `log` when given.
pub fn run(scenario: &Scenario, config: &SimConfig, log: Option<&mut dyn Write>) -> Result<RunMetrics, SimError> {
    run_observed(scenario, config, log, None)
}

/// [`run`], additionally handing each solved QP to `observer`.
pub fn run_observed(
    scenario: &Scenario,
    config: &SimConfig,
    mut log: Option<&mut dyn Write>,
    mut observer: Option<QpObserver<'_>>,
) -> Result<RunMetrics, SimError> {
    let keep_problems = observer.is_some();
    config.validate()?;
    let params = config.planner_params(scenario);
    let template = QpTemplate::new(params)?;
    let world = &scenario.world;
    let n_agents = scenario.agent_count();
    let radius = scenario.model.radius;
    let w = config.degree + 1;
    let last = config.segments - 1;
    let goals: Vec<_> = scenario.agents.iter().map(|a| a.goal).collect();
    let dist = GoalDistances::new(world, goals.iter().copied());
    let builder = SfcBuilder {
        obstacles: world.obstacles(),
        workspace: world.workspace(),
        clearance: radius,
        step: world.grid_size(),
    };

    let mut states: Vec<AgentPlanState> = scenario
        .agents
        .iter()
        .enumerate()
        .map(|(id, a)| AgentPlanState {
            id,
            waypoint: a.start,
            subgoal: world.position(a.start),
            prev_trajectory: None,
            desired_goal: a.goal,
            elapsed: 0,
        })
        .collect();
    let mut prev_sfcs: Vec<Option<Vec<Polytope>>> = vec![None; n_agents];
    let mut trackers = vec![StagnationTracker::default(); n_agents];
    let mut travelled = vec![0.0; n_agents];
    let mut metrics = RunMetrics {
        success: false,
        outcome: Outcome::Timeout,
        flight_time_s: None,
        flight_distance_m: 0.0,
        compute_ms: 0.0,
        steps: 0,
        min_pair_distance: f64::INFINITY,
        min_clearance: f64::INFINITY,
        max_stagnation: 0,
        max_kkt_residual: 0.0,
        violations: Vec::new(),
    };
    let mut planning_nanos: u128 = 0;
    let mut arrival_step: Option<u64> = None;

    for k in 0u64.. {
        if arrival_step.is_none() && k > config.max_steps() {
            break;
        }
        let positions: Vec<Point> = states
            .iter()
            .map(|s| match &s.prev_trajectory {
                Some(t) => t.control().point(1, 0),
                None => s.subgoal,
            })
            .collect();
        let groups = build_groups(&positions, scenario.comm_range);
        let group_ids = group_of(&groups, n_agents);

        let mut waypoints = vec![0; n_agents];
        for g in &groups {
            let out = decentralized_mapp(world, &dist, g, &states, k, scenario.comm_range, config.seed);
            for (&id, v) in g.members.iter().zip(out) {
                waypoints[id] = v;
            }
        }

        let mut violations = Vec::new();
        let mut fail = |kind, agents: Vec<AgentId>, value, detail: String| {
            violations.push(Violation { step: k, kind, agents, value, detail });
        };

        // Warm starts and obstacle corridors.
        let prepared: Vec<(Trajectory, Result<_, PlanFailure>, u128)> = (0..n_agents)
            .into_par_iter()
            .map(|i| {
                let clock = Instant::now();
                let s = &states[i];
                let init = initial_trajectory(
                    s.prev_trajectory.as_ref(),
                    positions[i],
                    k,
                    config.segments,
                    config.degree,
                    config.dt,
                )
                .expect("warm start shape matches the configuration");
                let sfc = build_sfcs(&builder, prev_sfcs[i].as_deref(), &init, s.subgoal, world.position(waypoints[i]))
                    .map_err(PlanFailure::from);
                (init, sfc, clock.elapsed().as_nanos())
            })
            .collect();

        // Separating halfplanes, once per pair inside each group.
        let mut separations: Vec<Vec<(AgentId, Vec<HalfPlane<f64>>)>> = vec![Vec::new(); n_agents];
        let mut pair_nanos = vec![0u128; n_agents];
        for g in &groups {
            for (a, &i) in g.members.iter().enumerate() {
                for &j in &g.members[a + 1..] {
                    let clock = Instant::now();
                    let prev_goals = (k > 0).then(|| (states[i].subgoal, states[j].subgoal));
                    match build_lsc(&prepared[i].0, &prepared[j].0, prev_goals, radius) {
                        Ok(pair) => {
                            separations[i].push((j, pair.first));
                            separations[j].push((i, pair.second));
                        }
                        Err(e) => {
                            let f = PlanFailure::from(e);
                            fail(f.kind, vec![i, j], f.value, f.detail);
                        }
                    }
                    let t = clock.elapsed().as_nanos() / 2;
                    pair_nanos[i] += t;
                    pair_nanos[j] += t;
                }
            }
        }

        // Warm-start containment checks.
        for (i, (init, sfc, _)) in prepared.iter().enumerate() {
            let sfc = match sfc {
                Ok(s) => s,
                Err(f) => {
                    fail(f.kind, vec![i], f.value, f.detail.clone());
                    continue;
                }
            };
            let c = init.control();
            for (m, poly) in sfc.corridors.iter().enumerate() {
                for h in &poly.halfplanes {
                    if let Some(v) = check_halfplanes(c.segment(m), |_| *h) {
                        fail(ViolationKind::CorridorInfeasible, vec![i], v, format!("segment {m} warm start outside corridor"));
                    }
                }
            }
            for (j, hs) in &separations[i] {
                if let Some(v) = check_halfplanes(c.points(), |idx| hs[idx]) {
                    fail(ViolationKind::SeparationInfeasible, vec![i, *j], v, "warm start outside separating halfplane".into());
                }
            }
            if k > 0 {
                let ends = [c.last(), states[i].subgoal];
                let last_planes = sfc.corridors[last]
                    .halfplanes
                    .iter()
                    .copied()
                    .chain(separations[i].iter().map(|(_, hs)| hs[last * w + config.degree]));
                for h in last_planes {
                    if let Some(v) = check_halfplanes(&ends, |_| h) {
                        fail(ViolationKind::SubgoalSegmentExposed, vec![i], v, "previous subgoal segment leaves final constraints".into());
                    }
                }
            }
        }

        // Subgoals and trajectory QPs.
        let plans: Vec<Result<AgentPlan, PlanFailure>> = (0..n_agents)
            .into_par_iter()
            .map(|i| {
                let clock = Instant::now();
                let (init, sfc, _) = &prepared[i];
                let sfc = match sfc {
                    Ok(s) => s,
                    Err(f) => return Err(PlanFailure { kind: f.kind, value: f.value, detail: f.detail.clone() }),
                };
                let mut constraints = sfc.corridors[last].halfplanes.clone();
                constraints.extend(separations[i].iter().map(|(_, hs)| hs[last * w + config.degree]));
                let anchor = if k == 0 { positions[i] } else { states[i].subgoal };
                let waypoint = world.position(waypoints[i]);
                let subgoal = optimize_subgoal(&SubgoalProblem { anchor, target: waypoint, constraints: &constraints })?;
                let problem = assemble_qp(
                    &template,
                    &AgentQpInput {
                        init,
                        subgoal,
                        waypoint,
                        corridors: &sfc.corridors,
                        separations: &separations[i],
                    },
                )?;
                let sol = solve_qp(&problem).map_err(OptimizeError::from)?;
                let report = kkt_report(&problem, &sol).map_err(OptimizeError::from)?;
                if !report.within(qp::KKT_TOL, qp::PRIMAL_TOL) {
                    return Err(PlanFailure {
                        kind: ViolationKind::SolverAccuracy,
                        value: report.stationarity.max(report.complementarity),
                        detail: format!("{report:?}"),
                    });
                }
                let trajectory = trajectory_from_solution(&params, &sol.x, k)?;
                Ok(AgentPlan {
                    subgoal,
                    trajectory,
                    kkt: report.stationarity.max(report.complementarity).max(report.dual),
                    nanos: clock.elapsed().as_nanos(),
                    problem: keep_problems.then_some(problem),
                })
            })
            .collect();

        let mut committed = Vec::with_capacity(n_agents);
        for (i, plan) in plans.into_iter().enumerate() {
            match plan {
                Ok(mut p) => {
                    planning_nanos += p.nanos + prepared[i].2 + pair_nanos[i];
                    if let (Some(obs), Some(problem)) = (observer.as_deref_mut(), p.problem.take()) {
                        obs(k, i, &problem);
                    }
                    metrics.max_kkt_residual = metrics.max_kkt_residual.max(p.kkt);
                    committed.push(p);
                }
                Err(f) => fail(f.kind, vec![i], f.value, f.detail),
            }
        }

        let mut arrived = vec![false; n_agents];
        if committed.len() == n_agents {
            let trajectories: Vec<Trajectory> = committed.iter().map(|p| p.trajectory.clone()).collect();
            let subgoals: Vec<Point> = committed.iter().map(|p| p.subgoal).collect();
            let report = monitor_step(&StepSnapshot {
                step: k,
                world,
                radius,
                v_max: scenario.model.v_max,
                a_max: scenario.model.a_max,
                samples_per_segment: config.samples_per_segment,
                trajectories: &trajectories,
                waypoints: &waypoints,
                subgoals: &subgoals,
            });
            metrics.min_pair_distance = metrics.min_pair_distance.min(report.min_pair_distance);
            metrics.min_clearance = metrics.min_clearance.min(report.min_clearance);
            violations.extend(report.violations);

            for i in 0..n_agents {
                let goal = world.position(goals[i]);
                arrived[i] = waypoints[i] == goals[i]
                    && (subgoals[i] - goal).norm() <= GEOMETRY_TOL
                    && (positions[i] - goal).norm() <= config.arrival_tol;
                let still = trackers[i].observe(positions[i], subgoals[i], waypoints[i], arrived[i]);
                metrics.max_stagnation = metrics.max_stagnation.max(still);
                if still >= config.stagnation_limit {
                    violations.push(Violation {
                        step: k,
                        kind: ViolationKind::Stagnation,
                        agents: vec![i],
                        value: still as f64,
                        detail: "state unchanged for the stagnation limit".into(),
                    });
                }
            }
        }

        if let Some(out) = log.as_deref_mut() {
            let record = StepRecord {
                step: k,
                time: k as f64 * config.dt,
                agents: (0..n_agents)
                    .map(|i| AgentStepRecord {
                        id: i,
                        group: group_ids[i],
                        position: positions[i],
                        waypoint: waypoints[i],
                        waypoint_position: world.position(waypoints[i]),
                        subgoal: committed.get(i).map_or(states[i].subgoal, |p| p.subgoal),
                        arrived: arrived[i],
                        trajectory: TrajectoryRecord::from_trajectory(
                            i,
                            committed.get(i).map_or(&prepared[i].0, |p| &p.trajectory),
                        ),
                    })
                    .collect(),
                violations: violations.clone(),
            };
            write_record(out, &record)?;
        }

        metrics.steps = k + 1;
        if let Some(first) = violations.first() {
            metrics.outcome = Outcome::Violation(first.kind);
            metrics.violations = violations;
            break;
        }

        for (i, plan) in committed.into_iter().enumerate() {
            travelled[i] += plan.trajectory.segment_arc_length(0);
            let s = &mut states[i];
            s.elapsed = if waypoints[i] == goals[i] { 0 } else { s.elapsed + 1 };
            s.waypoint = waypoints[i];
            s.subgoal = plan.subgoal;
            s.prev_trajectory = Some(plan.trajectory);
            prev_sfcs[i] = Some(prepared[i].1.as_ref().map(|o| o.corridors.clone()).unwrap_or_default());
        }

        if arrived.iter().all(|&a| a) {
            let first = *arrival_step.get_or_insert(k);
            if k - first >= config.settle_ticks {
                metrics.success = true;
                metrics.outcome = Outcome::Success;
                metrics.flight_time_s = Some(first as f64 * config.dt);
                break;
            }
        } else {
            arrival_step = None;
        }
    }

    if n_agents > 0 {
        metrics.flight_distance_m = travelled.iter().sum::<f64>() / n_agents as f64;
        metrics.compute_ms = planning_nanos as f64 / 1e6 / (n_agents as f64 * metrics.steps.max(1) as f64);
    }
    Ok(metrics)
}
