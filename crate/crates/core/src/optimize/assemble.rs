//! The per-agent trajectory QP over stacked control points.
//!
//! Variable layout: control point `l` of segment `m`, coordinate `axis`, sits
//! at index `2 * (m * (degree + 1) + l) + axis`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::qp::{QpProblem, QpStructure, RowTag, SparseRows};
use super::OptimizeError;
use crate::bernstein::{ControlGrid, PiecewiseTrajectory, GAUSS_LEGENDRE_8};
use crate::corridors::{HalfPlane, Polytope};
use crate::network::AgentId;
use crate::scalar::binomial;
use crate::world::CommRange;
use crate::{Point, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    pub segments: usize,
    pub degree: usize,
    pub dt: f64,
    pub w_err: f64,
    pub w_der: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub radius: f64,
    pub comm_range: CommRange,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            segments: 10,
            degree: 5,
            dt: 0.2,
            w_err: 1.0,
            w_der: 0.01,
            v_max: 1.0,
            a_max: 2.0,
            radius: 0.15,
            comm_range: CommRange::INFINITE,
        }
    }
}

impl PlannerParams {
    pub fn var(&self, m: usize, l: usize, axis: usize) -> usize {
        2 * (m * (self.degree + 1) + l) + axis
    }

    pub fn dim(&self) -> usize {
        2 * self.segments * (self.degree + 1)
    }

    /// Control points per segment.
    pub fn width(&self) -> usize {
        self.degree + 1
    }
}

/// `∫₀¹ Bₐ Bᵦ ds` for the Bernstein basis of `degree`.
pub fn bernstein_gram(degree: usize) -> DMatrix<f64> {
    let q = degree;
    DMatrix::from_fn(q + 1, q + 1, |a, b| {
        binomial::<f64>(q, a) * binomial::<f64>(q, b) / ((2 * q + 1) as f64 * binomial::<f64>(2 * q, a + b))
    })
}

/// Per-axis Hessian block of `w_der ∫‖p‴‖²` over one segment, in the
/// `½cᵀHc` convention.
pub fn jerk_hessian_block(degree: usize, dt: f64, w_der: f64) -> DMatrix<f64> {
    let n = degree;
    let q = n - 3;
    let gram = bernstein_gram(q);
    let mut d3 = DMatrix::zeros(q + 1, n + 1);
    for a in 0..=q {
        for (off, coef) in [-1.0, 3.0, -3.0, 1.0].into_iter().enumerate() {
            d3[(a, a + off)] = coef;
        }
    }
    let k = (n * (n - 1) * (n - 2)) as f64 / (dt * dt * dt);
    d3.transpose() * gram * d3 * (2.0 * w_der * dt * k * k)
}

/// Hessian and equality rows shared by every agent and step with the same
/// horizon, degree, period and weights.
#[derive(Debug, Clone)]
pub struct QpTemplate {
    params: PlannerParams,
    structure: Arc<QpStructure>,
}

impl QpTemplate {
    pub fn new(params: PlannerParams) -> Result<Self, OptimizeError> {
        let p = params;
        if p.degree < 5 || p.segments == 0 || !(p.dt > 0.0) {
            return Err(OptimizeError::Params("need degree ≥ 5, segments ≥ 1 and dt > 0".into()));
        }
        let (n, w) = (p.degree, p.width());
        let dim = p.dim();
        let mut h = DMatrix::zeros(dim, dim);
        let block = jerk_hessian_block(n, p.dt, p.w_der);
        for m in 0..p.segments {
            for axis in 0..2 {
                for a in 0..w {
                    for b in 0..w {
                        h[(p.var(m, a, axis), p.var(m, b, axis))] += block[(a, b)];
                    }
                }
            }
        }
        for axis in 0..2 {
            let i = p.var(p.segments - 1, n, axis);
            h[(i, i)] += 2.0 * p.w_err;
        }

        let mut eq = SparseRows::new();
        for axis in 0..2 {
            let c = |l| p.var(0, l, axis);
            eq.push(&[(c(0), 1.0)]);
            eq.push(&[(c(1), 1.0), (c(0), -1.0)]);
            eq.push(&[(c(2), 1.0), (c(1), -2.0), (c(0), 1.0)]);
        }
        for m in 0..p.segments - 1 {
            for axis in 0..2 {
                let a = |l| p.var(m, l, axis);
                let b = |l| p.var(m + 1, l, axis);
                eq.push(&[(b(0), 1.0), (a(n), -1.0)]);
                eq.push(&[(b(1), 1.0), (b(0), -1.0), (a(n), -1.0), (a(n - 1), 1.0)]);
                eq.push(&[
                    (b(2), 1.0),
                    (b(1), -2.0),
                    (b(0), 1.0),
                    (a(n), -1.0),
                    (a(n - 1), 2.0),
                    (a(n - 2), -1.0),
                ]);
            }
        }
        for axis in 0..2 {
            let c = |l| p.var(p.segments - 1, l, axis);
            eq.push(&[(c(n), 1.0), (c(n - 1), -1.0)]);
            eq.push(&[(c(n - 1), 1.0), (c(n - 2), -1.0)]);
        }
        let structure = Arc::new(QpStructure::new(h, eq)?);
        structure.reduced_dim()?;
        Ok(QpTemplate { params, structure })
    }

    pub fn params(&self) -> &PlannerParams {
        &self.params
    }

    pub fn structure(&self) -> &Arc<QpStructure> {
        &self.structure
    }
}

/// Everything one agent contributes to its QP at one step.
#[derive(Debug, Clone)]
pub struct AgentQpInput<'a> {
    /// Warm start; fixes the initial state and seeds the solver.
    pub init: &'a Trajectory,
    pub subgoal: Point,
    pub waypoint: Point,
    /// One corridor per segment.
    pub corridors: &'a [Polytope],
    /// Per neighbour: one halfplane per control point.
    pub separations: &'a [(AgentId, Vec<HalfPlane<f64>>)],
}

fn push_halfplane(rows: &mut SparseRows, rhs: &mut Vec<f64>, p: &PlannerParams, m: usize, l: usize, h: &HalfPlane<f64>) {
    // n·c ≥ o  ⇔  −n·c ≤ −o
    let mut e = Vec::with_capacity(2);
    for axis in 0..2 {
        let v = h.normal.axis(axis);
        if v != 0.0 {
            e.push((p.var(m, l, axis), -v));
        }
    }
    rows.push(&e);
    rhs.push(-h.offset);
}

pub fn assemble_qp(template: &QpTemplate, input: &AgentQpInput) -> Result<QpProblem, OptimizeError> {
    let p = template.params;
    let (n, w, segs) = (p.degree, p.width(), p.segments);
    let ic = input.init.control();
    if ic.segments() != segs || ic.degree() != n || input.corridors.len() != segs {
        return Err(OptimizeError::Params("warm start or corridors do not match the template".into()));
    }
    if input.separations.iter().any(|(_, hs)| hs.len() != segs * w) {
        return Err(OptimizeError::Params("separating halfplane count".into()));
    }

    let mut linear = vec![0.0; p.dim()];
    for axis in 0..2 {
        linear[p.var(segs - 1, n, axis)] = -2.0 * p.w_err * input.subgoal.axis(axis);
    }
    let constant = p.w_err * input.subgoal.norm_sq();

    let c0 = ic.segment(0);
    let mut eq_rhs = Vec::with_capacity(template.structure.equalities().len());
    for axis in 0..2 {
        let c = |l: usize| c0[l].axis(axis);
        eq_rhs.extend([c(0), c(1) - c(0), c(2) - 2.0 * c(1) + c(0)]);
    }
    eq_rhs.resize(template.structure.equalities().len(), 0.0);

    let mut rows = SparseRows::new();
    let mut rhs = Vec::new();
    let mut tags = Vec::new();
    for (m, poly) in input.corridors.iter().enumerate() {
        for l in 0..w {
            for h in &poly.halfplanes {
                push_halfplane(&mut rows, &mut rhs, &p, m, l, h);
                tags.push(RowTag::Corridor { segment: m });
            }
        }
    }
    for (other, hs) in input.separations {
        for m in 0..segs {
            for l in 0..w {
                push_halfplane(&mut rows, &mut rhs, &p, m, l, &hs[m * w + l]);
                tags.push(RowTag::Separation { other: *other, segment: m });
            }
        }
    }
    let v_lim = p.v_max * p.dt / n as f64;
    for m in 0..segs {
        for l in 0..n {
            for axis in 0..2 {
                for s in [1.0, -1.0] {
                    rows.push(&[(p.var(m, l + 1, axis), s), (p.var(m, l, axis), -s)]);
                    rhs.push(v_lim);
                    tags.push(RowTag::Velocity { segment: m });
                }
            }
        }
    }
    let a_lim = p.a_max * p.dt * p.dt / (n * (n - 1)) as f64;
    for m in 0..segs {
        for l in 0..n - 1 {
            for axis in 0..2 {
                for s in [1.0, -1.0] {
                    rows.push(&[
                        (p.var(m, l + 2, axis), s),
                        (p.var(m, l + 1, axis), -2.0 * s),
                        (p.var(m, l, axis), s),
                    ]);
                    rhs.push(a_lim);
                    tags.push(RowTag::Acceleration { segment: m });
                }
            }
        }
    }
    if !p.comm_range.is_infinite() {
        let half = p.comm_range.metres() / 2.0;
        for m in 0..segs {
            for h in 0..segs - m {
                for l in 0..w {
                    if h == 0 && l == 0 {
                        continue;
                    }
                    for axis in 0..2 {
                        for s in [1.0, -1.0] {
                            rows.push(&[(p.var(m + h, l, axis), s), (p.var(m, 0, axis), -s)]);
                            rhs.push(half - p.radius);
                            tags.push(RowTag::CommTrajectory { segment: m });
                        }
                    }
                }
            }
        }
        for m in 0..segs {
            for axis in 0..2 {
                for s in [1.0, -1.0] {
                    rows.push(&[(p.var(m, n, axis), s)]);
                    rhs.push(half + s * input.waypoint.axis(axis));
                    tags.push(RowTag::CommWaypoint { segment: m });
                }
            }
        }
    }

    let start: Vec<f64> = ic.points().iter().flat_map(|q| [q.x, q.y]).collect();
    Ok(QpProblem {
        structure: template.structure.clone(),
        linear,
        constant,
        eq_rhs,
        ineq: rows,
        ineq_rhs: rhs,
        tags,
        start: Some(start),
    })
}

/// Trajectory whose control points are the stacked solution `x`.
pub fn trajectory_from_solution(
    params: &PlannerParams,
    x: &[f64],
    start_step: u64,
) -> Result<Trajectory, OptimizeError> {
    let pts = x.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect();
    let grid = ControlGrid::new(params.segments, params.degree, params.dt, start_step, pts)?;
    Ok(PiecewiseTrajectory::new(grid)?)
}

/// Objective split into its distance and jerk parts, evaluated from the curve
/// itself by Gauss–Legendre quadrature rather than the Gram matrix.
pub fn objective_terms(traj: &Trajectory, subgoal: Point, w_err: f64, w_der: f64) -> (f64, f64) {
    let c = traj.control();
    let err = w_err * (c.last() - subgoal).norm_sq();
    let mut jerk = 0.0;
    for m in 0..c.segments() {
        let t0 = c.start_time() + m as f64 * c.dt();
        for &(node, weight) in GAUSS_LEGENDRE_8.iter() {
            let t = t0 + 0.5 * (node + 1.0) * c.dt();
            let j = traj.evaluate_derivative(3, t).expect("inside the horizon");
            jerk += 0.5 * c.dt() * weight * j.norm_sq();
        }
    }
    (err, w_der * jerk)
}
