//! Subgoal line search and the trajectory QP with its active-set solver.

mod assemble;
pub mod qp;
mod subgoal;

pub use assemble::{
    assemble_qp, bernstein_gram, jerk_hessian_block, objective_terms, trajectory_from_solution, AgentQpInput,
    PlannerParams, QpTemplate,
};
pub use qp::{kkt_report, solve_qp, KktReport, QpError, QpProblem, QpSolution, QpStructure, RowTag, SparseRows};
pub use subgoal::{optimize_subgoal, subgoal_fraction, SubgoalProblem};

use thiserror::Error;

use crate::bernstein::BernsteinError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("no subgoal on the segment satisfies constraint {constraint} (short by {shortfall})")]
    SubgoalInfeasible { constraint: usize, shortfall: f64 },
    #[error("invalid planner parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error(transparent)]
    Trajectory(#[from] BernsteinError),
}
