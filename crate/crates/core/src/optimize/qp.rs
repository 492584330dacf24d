//! Dense convex QP with sparse constraint rows, solved by a primal active-set
//! method in the null space of the equality constraints.
//!
//! Problem: minimise `½xᵀHx + qᵀx + constant` subject to `A_eq x = b_eq` and
//! `A_in x ≤ b_in`. The Hessian and equality rows live in a shared
//! [`QpStructure`] whose factorisations are computed once and reused by every
//! problem built on it.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Equality residual accepted on a start point and on the solution.
pub const PRIMAL_TOL: f64 = 1e-8;
/// Bound on the KKT residuals of a returned solution.
pub const KKT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("hessian is not symmetric")]
    NotSymmetric,
    #[error("equality rows are linearly dependent (pivot {pivot})")]
    EqualityRankDeficient { pivot: usize },
    #[error("hessian is not positive definite on the equality null space")]
    NotStrictlyConvex,
    #[error("start point violates equality rows by {residual}")]
    StartOffManifold { residual: f64 },
    #[error("infeasible: row {row} ({tag:?}) violated by {violation}")]
    Infeasible { row: usize, tag: RowTag, violation: f64 },
    #[error("no convergence after {iterations} iterations")]
    NotConverged { iterations: usize },
}

/// Which constraint family an inequality row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowTag {
    Generic,
    Corridor { segment: usize },
    Separation { other: usize, segment: usize },
    Velocity { segment: usize },
    Acceleration { segment: usize },
    CommTrajectory { segment: usize },
    CommWaypoint { segment: usize },
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Default for SparseRows {
    fn default() -> Self {
        SparseRows::new()
    }
}

impl SparseRows {
    pub fn new() -> Self {
        SparseRows {
            ptr: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Dense rows; exact zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let mut out = SparseRows::new();
        for r in rows {
            let e: Vec<(usize, f64)> = r.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect();
            out.push(&e);
        }
        out
    }

    pub fn push(&mut self, entries: &[(usize, f64)]) {
        for &(c, v) in entries {
            self.cols.push(c);
            self.vals.push(v);
        }
        self.ptr.push(self.cols.len());
    }

    pub fn len(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.ptr[i], self.ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn dot(&self, i: usize, x: &[f64]) -> f64 {
        self.row(i).map(|(c, v)| v * x[c]).sum()
    }

    fn max_col(&self) -> Option<usize> {
        self.cols.iter().copied().max()
    }

    pub fn to_dense(&self, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.len(), dim);
        for i in 0..self.len() {
            for (c, v) in self.row(i) {
                m[(i, c)] += v;
            }
        }
        m
    }
}

/// Null-space data for a fixed Hessian and equality matrix.
#[derive(Debug)]
struct Reduction {
    /// Thin orthonormal factor of `A_eqᵀ` (dim × m).
    q1: DMatrix<f64>,
    /// Upper-triangular factor of `A_eqᵀ` (m × m).
    r: DMatrix<f64>,
    /// Orthonormal null-space basis of `A_eq` (dim × k).
    z: DMatrix<f64>,
    /// `Zᵀ H Z`.
    h_red: DMatrix<f64>,
    /// Lower Cholesky factor of `h_red`.
    chol: DMatrix<f64>,
}

impl Reduction {
    fn new(hessian: &DMatrix<f64>, eq: &SparseRows) -> Result<Self, QpError> {
        let dim = hessian.nrows();
        let m = eq.len();
        if m > dim {
            return Err(QpError::EqualityRankDeficient { pivot: dim });
        }
        let (q1, r, z) = if m == 0 {
            (DMatrix::zeros(dim, 0), DMatrix::zeros(0, 0), DMatrix::identity(dim, dim))
        } else {
            let qr = eq.to_dense(dim).transpose().qr();
            let r = qr.r();
            let scale = (0..m).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
            if let Some(pivot) = (0..m).find(|&i| !(r[(i, i)].abs() > 1e-10 * scale)) {
                return Err(QpError::EqualityRankDeficient { pivot });
            }
            let mut qt = DMatrix::identity(dim, dim);
            qr.q_tr_mul(&mut qt);
            let z = qt.rows(m, dim - m).transpose();
            (qr.q(), r, z)
        };
        let mut h_red = z.transpose() * hessian * &z;
        let sym = (&h_red + h_red.transpose()) * 0.5;
        h_red = sym;
        let chol = nalgebra::Cholesky::new(h_red.clone()).ok_or(QpError::NotStrictlyConvex)?.l();
        if (0..chol.nrows()).any(|i| !(chol[(i, i)] > 0.0)) {
            return Err(QpError::NotStrictlyConvex);
        }
        Ok(Reduction { q1, r, z, h_red, chol })
    }

    /// Minimum-norm solution of `A_eq x = b`.
    fn particular(&self, b: &[f64]) -> DVector<f64> {
        if b.is_empty() {
            return DVector::zeros(self.z.nrows());
        }
        let y = self
            .r
            .tr_solve_upper_triangular(&DVector::from_column_slice(b))
            .expect("nonsingular after rank check");
        &self.q1 * y
    }

    /// Least-squares multipliers `ν` making `g + A_eqᵀ ν` orthogonal to the
    /// range of `A_eqᵀ`.
    fn equality_multipliers(&self, g: &DVector<f64>) -> DVector<f64> {
        if self.r.nrows() == 0 {
            return DVector::zeros(0);
        }
        let t = -(self.q1.transpose() * g);
        self.r.solve_upper_triangular(&t).expect("nonsingular after rank check")
    }
}

/// Hessian and equality rows shared by a family of problems.
#[derive(Debug)]
pub struct QpStructure {
    hessian: DMatrix<f64>,
    equalities: SparseRows,
    reduction: OnceLock<Result<Reduction, QpError>>,
}

impl QpStructure {
    pub fn new(hessian: DMatrix<f64>, equalities: SparseRows) -> Result<Self, QpError> {
        let dim = hessian.nrows();
        if hessian.ncols() != dim {
            return Err(QpError::Dimension("hessian must be square".into()));
        }
        if equalities.max_col().is_some_and(|c| c >= dim) {
            return Err(QpError::Dimension("equality column out of range".into()));
        }
        let scale = hessian.amax().max(1.0);
        if (&hessian - hessian.transpose()).amax() > 1e-12 * scale {
            return Err(QpError::NotSymmetric);
        }
        Ok(QpStructure {
            hessian,
            equalities,
            reduction: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.hessian.nrows()
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn equalities(&self) -> &SparseRows {
        &self.equalities
    }

    /// Free variables left after eliminating the equality rows.
    pub fn reduced_dim(&self) -> Result<usize, QpError> {
        Ok(self.reduction()?.z.ncols())
    }

    fn reduction(&self) -> Result<&Reduction, QpError> {
        self.reduction
            .get_or_init(|| Reduction::new(&self.hessian, &self.equalities))
            .as_ref()
            .map_err(Clone::clone)
    }
}

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub structure: Arc<QpStructure>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub eq_rhs: Vec<f64>,
    /// Rows of `A_in x ≤ b_in`.
    pub ineq: SparseRows,
    pub ineq_rhs: Vec<f64>,
    /// Family of each inequality row; may be empty for untagged problems.
    pub tags: Vec<RowTag>,
    /// Feasible start point; the minimum-norm equality solution otherwise.
    pub start: Option<Vec<f64>>,
}

impl QpProblem {
    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn tag(&self, row: usize) -> RowTag {
        self.tags.get(row).copied().unwrap_or(RowTag::Generic)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        0.5 * xv.dot(&(self.structure.hessian() * &xv))
            + self.linear.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            + self.constant
    }

    /// Inequality slack `b - a·x` per row.
    pub fn slacks(&self, x: &[f64]) -> Vec<f64> {
        (0..self.ineq.len()).map(|i| self.ineq_rhs[i] - self.ineq.dot(i, x)).collect()
    }

    pub fn equality_residual(&self, x: &[f64]) -> f64 {
        let eq = self.structure.equalities();
        (0..eq.len())
            .map(|i| (eq.dot(i, x) - self.eq_rhs[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Most violated inequality row beyond `tol`, if any.
    pub fn worst_violation(&self, x: &[f64], tol: f64) -> Option<(usize, f64)> {
        self.slacks(x)
            .into_iter()
            .enumerate()
            .filter(|&(_, s)| s < -tol)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, s)| (i, -s))
    }

    fn validate(&self) -> Result<(), QpError> {
        let dim = self.dim();
        if self.linear.len() != dim {
            return Err(QpError::Dimension("linear term length".into()));
        }
        if self.eq_rhs.len() != self.structure.equalities().len() {
            return Err(QpError::Dimension("equality right-hand side length".into()));
        }
        if self.ineq_rhs.len() != self.ineq.len() {
            return Err(QpError::Dimension("inequality right-hand side length".into()));
        }
        if self.ineq.max_col().is_some_and(|c| c >= dim) {
            return Err(QpError::Dimension("inequality column out of range".into()));
        }
        if !self.tags.is_empty() && self.tags.len() != self.ineq.len() {
            return Err(QpError::Dimension("row tag count".into()));
        }
        if self.start.as_ref().is_some_and(|s| s.len() != dim) {
            return Err(QpError::Dimension("start point length".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// Non-negative multiplier per inequality row (zero off the active set).
    pub multipliers: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Growing orthonormal basis of the working-set columns `L⁻¹ãᵢ`.
struct WorkingSet {
    rows: Vec<usize>,
    cols: Vec<DVector<f64>>,
    q: Vec<DVector<f64>>,
    /// Column `j` of the upper-triangular factor, length `j + 1`.
    r: Vec<Vec<f64>>,
}

impl WorkingSet {
    fn new() -> Self {
        WorkingSet { rows: Vec::new(), cols: Vec::new(), q: Vec::new(), r: Vec::new() }
    }

    fn append_factor(&mut self, col: &DVector<f64>) {
        let mut v = col.clone();
        let mut rc = vec![0.0; self.q.len() + 1];
        // Two Gram–Schmidt passes keep the basis orthonormal to rounding.
        for _ in 0..2 {
            for (i, qi) in self.q.iter().enumerate() {
                let c = qi.dot(&v);
                rc[i] += c;
                v.axpy(-c, qi, 1.0);
            }
        }
        let norm = v.norm();
        rc[self.q.len()] = norm;
        self.q.push(v / norm);
        self.r.push(rc);
    }

    fn add(&mut self, row: usize, col: DVector<f64>) {
        self.append_factor(&col);
        self.rows.push(row);
        self.cols.push(col);
    }

    fn remove(&mut self, pos: usize) {
        self.rows.remove(pos);
        self.cols.remove(pos);
        self.q.clear();
        self.r.clear();
        let cols = std::mem::take(&mut self.cols);
        for c in &cols {
            self.append_factor(c);
        }
        self.cols = cols;
    }

    /// True when `v` lies in the span of the basis up to rounding.
    fn spans(&self, v: &DVector<f64>) -> bool {
        self.project(v).1.norm() <= 1e-8 * v.norm()
    }

    /// `(Qᵀv, v − QQᵀv)`.
    fn project(&self, v: &DVector<f64>) -> (Vec<f64>, DVector<f64>) {
        let mut rest = v.clone();
        let t: Vec<f64> = self.q.iter().map(|qi| qi.dot(v)).collect();
        for (ti, qi) in t.iter().zip(&self.q) {
            rest.axpy(-ti, qi, 1.0);
        }
        (t, rest)
    }

    /// Solves `R μ = −t`.
    fn multipliers(&self, t: &[f64]) -> Vec<f64> {
        let w = t.len();
        let mut mu = vec![0.0; w];
        for i in (0..w).rev() {
            let mut s = -t[i];
            for j in i + 1..w {
                s -= self.r[j][i] * mu[j];
            }
            mu[i] = s / self.r[i][i];
        }
        mu
    }
}

const MAX_ITERATIONS: usize = 20_000;

/// Solves the problem starting from `problem.start` (or the minimum-norm
/// equality solution), which must satisfy every row within [`PRIMAL_TOL`].
///
/// Blocking rows are added one per iteration, ties going to the lowest row
/// index; when the working-set minimiser is reached the lowest-indexed row with
/// a negative multiplier is released. The result depends only on the problem.
pub fn solve_qp(problem: &QpProblem) -> Result<QpSolution, QpError> {
    problem.validate()?;
    let red = problem.structure.reduction()?;
    let dim = problem.dim();
    let k = red.z.ncols();
    let h = problem.structure.hessian();
    let x0 = red.particular(&problem.eq_rhs);
    let q = DVector::from_column_slice(&problem.linear);

    let start = match &problem.start {
        Some(s) => DVector::from_column_slice(s),
        None => x0.clone(),
    };
    let eq_res = problem.equality_residual(start.as_slice());
    if eq_res > PRIMAL_TOL * (1.0 + start.amax()) {
        return Err(QpError::StartOffManifold { residual: eq_res });
    }
    if let Some((row, violation)) = problem.worst_violation(start.as_slice(), PRIMAL_TOL) {
        return Err(QpError::Infeasible { row, tag: problem.tag(row), violation });
    }

    let mut z = red.z.transpose() * (&start - &x0);
    let c = red.z.transpose() * (h * &x0 + &q);
    let mut x: Vec<f64> = (&x0 + &red.z * &z).as_slice().to_vec();
    let mut slack = problem.slacks(&x);
    let n_rows = problem.ineq.len();
    let row_norm: Vec<f64> = (0..n_rows)
        .map(|i| problem.ineq.row(i).map(|(_, v)| v * v).sum::<f64>().sqrt())
        .collect();
    let mut ws = WorkingSet::new();
    let mut in_ws = vec![false; n_rows];
    let mut mu_final = vec![0.0; n_rows];

    for iteration in 0..MAX_ITERATIONS {
        let g = &red.h_red * &z + &c;
        let g_hat = red.chol.solve_lower_triangular(&g).expect("positive diagonal");
        let (t, rest) = ws.project(&g_hat);
        let p = -red.chol.tr_solve_lower_triangular(&rest).expect("positive diagonal");
        let p_tol = 1e-11 * (1.0 + z.amax());
        let mut step = None;
        if p.amax() > p_tol {
            let px = &red.z * &p;
            let px_inf = px.amax();
            let ap_all: Vec<f64> = (0..n_rows).map(|i| problem.ineq.dot(i, px.as_slice())).collect();
            // Rows equivalent to working-set rows through the equalities (a
            // corridor row on both sides of a joint, say) only see rounding
            // noise along `p`; they are skipped rather than added.
            let mut spanned = Vec::new();
            let (alpha, blocking) = loop {
                let mut alpha = 1.0;
                let mut blocking: Option<usize> = None;
                for (i, &ap) in ap_all.iter().enumerate() {
                    if in_ws[i] || ap <= 1e-13 * row_norm[i] * px_inf || spanned.contains(&i) {
                        continue;
                    }
                    let a = slack[i].max(0.0) / ap;
                    if a < alpha {
                        alpha = a;
                        blocking = Some(i);
                    }
                }
                let Some(row) = blocking else { break (alpha, None) };
                let mut a_red = DVector::zeros(k);
                for (col, v) in problem.ineq.row(row) {
                    for j in 0..k {
                        a_red[j] += v * red.z[(col, j)];
                    }
                }
                let col = red.chol.solve_lower_triangular(&a_red).expect("positive diagonal");
                if ws.spans(&col) {
                    spanned.push(row);
                    continue;
                }
                break (alpha, Some((row, col)));
            };
            step = Some((alpha, px, ap_all, blocking));
        }
        if step.is_none() {
            // The step below the stopping threshold can still leave a visible
            // gradient on a stiff reduced Hessian; take it when nothing blocks.
            // The working-set multipliers are unchanged by it.
            if p.amax() > 0.0 {
                let px = &red.z * &p;
                let ap: Vec<f64> = (0..n_rows).map(|i| problem.ineq.dot(i, px.as_slice())).collect();
                if (0..n_rows).all(|i| in_ws[i] || ap[i] <= slack[i].max(0.0)) {
                    z += &p;
                    for (xi, pi) in x.iter_mut().zip(px.iter()) {
                        *xi += pi;
                    }
                    for (s, a) in slack.iter_mut().zip(&ap) {
                        *s -= a;
                    }
                }
            }
            let mu = ws.multipliers(&t);
            let mu_tol = 1e-10 * (1.0 + g.amax());
            let release = ws
                .rows
                .iter()
                .zip(&mu)
                .enumerate()
                .filter(|(_, (_, &m))| m < -mu_tol)
                .min_by_key(|(_, (&row, _))| row)
                .map(|(pos, _)| pos);
            match release {
                Some(pos) => {
                    in_ws[ws.rows[pos]] = false;
                    ws.remove(pos);
                    continue;
                }
                None => {
                    for (&row, &m) in ws.rows.iter().zip(&mu) {
                        mu_final[row] = m.max(0.0);
                    }
                    // Recompute from the reduced coordinates to shed drift.
                    let x_final = &x0 + &red.z * &z;
                    let objective = problem.objective(x_final.as_slice());
                    return Ok(QpSolution {
                        x: x_final.as_slice().to_vec(),
                        multipliers: mu_final,
                        objective,
                        iterations: iteration,
                    });
                }
            }
        }

        let (alpha, px, ap_all, blocking) = step.expect("non-stationary iterate has a step");
        z.axpy(alpha, &p, 1.0);
        for (xi, pi) in x.iter_mut().zip(px.iter()) {
            *xi += alpha * pi;
        }
        for (s, ap) in slack.iter_mut().zip(&ap_all) {
            *s -= alpha * ap;
        }
        if let Some((row, col)) = blocking {
            ws.add(row, col);
            in_ws[row] = true;
        }
        debug_assert_eq!(x.len(), dim);
    }
    Err(QpError::NotConverged { iterations: MAX_ITERATIONS })
}

/// Residuals of the first-order optimality conditions at `sol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `‖Hx + q + A_inᵀμ + A_eqᵀν‖∞` with least-squares `ν`.
    pub stationarity: f64,
    pub equality: f64,
    /// Largest inequality violation (zero when feasible).
    pub inequality: f64,
    /// `max |μᵢ · slackᵢ|`.
    pub complementarity: f64,
    /// Most negative multiplier (zero when all are non-negative).
    pub dual: f64,
}

impl KktReport {
    pub fn within(&self, kkt_tol: f64, primal_tol: f64) -> bool {
        self.stationarity <= kkt_tol
            && self.complementarity <= kkt_tol
            && self.dual <= kkt_tol
            && self.equality <= primal_tol
            && self.inequality <= primal_tol
    }
}

pub fn kkt_report(problem: &QpProblem, sol: &QpSolution) -> Result<KktReport, QpError> {
    let red = problem.structure.reduction()?;
    let x = DVector::from_column_slice(&sol.x);
    let mut grad = problem.structure.hessian() * &x + DVector::from_column_slice(&problem.linear);
    for (i, &m) in sol.multipliers.iter().enumerate() {
        if m != 0.0 {
            for (c, v) in problem.ineq.row(i) {
                grad[c] += m * v;
            }
        }
    }
    let nu = red.equality_multipliers(&grad);
    let eq = problem.structure.equalities();
    for (i, &n) in nu.iter().enumerate() {
        for (c, v) in eq.row(i) {
            grad[c] += n * v;
        }
    }
    let slack = problem.slacks(&sol.x);
    Ok(KktReport {
        stationarity: grad.amax(),
        equality: problem.equality_residual(&sol.x),
        inequality: slack.iter().fold(0.0, |a, &s| a.max(-s)),
        complementarity: slack
            .iter()
            .zip(&sol.multipliers)
            .fold(0.0, |a, (s, m)| a.max((s * m).abs())),
        dual: sol.multipliers.iter().fold(0.0, |a, &m| a.max(-m)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        a.transpose() * &a + DMatrix::identity(n, n) * 0.5
    }

    fn problem(
        h: DMatrix<f64>,
        q: Vec<f64>,
        eq: Vec<Vec<f64>>,
        eq_rhs: Vec<f64>,
        ineq: Vec<Vec<f64>>,
        ineq_rhs: Vec<f64>,
        start: Option<Vec<f64>>,
    ) -> QpProblem {
        QpProblem {
            structure: Arc::new(QpStructure::new(h, SparseRows::from_dense(&eq)).unwrap()),
            linear: q,
            constant: 0.0,
            eq_rhs,
            ineq: SparseRows::from_dense(&ineq),
            ineq_rhs,
            tags: Vec::new(),
            start,
        }
    }

    #[test]
    fn unconstrained_matches_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let h = random_spd(&mut rng, 8);
            let q: Vec<f64> = (0..8).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let direct = -h.clone().lu().solve(&DVector::from_column_slice(&q)).unwrap();
            let sol = solve_qp(&problem(h, q, vec![], vec![], vec![], vec![], None)).unwrap();
            for (a, b) in sol.x.iter().zip(direct.iter()) {
                assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn equality_only_matches_kkt_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = 7;
            let m = 3;
            let h = random_spd(&mut rng, n);
            let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // [H Aᵀ; A 0] [x; ν] = [−q; b]
            let mut kkt = DMatrix::zeros(n + m, n + m);
            kkt.view_mut((0, 0), (n, n)).copy_from(&h);
            for i in 0..m {
                for j in 0..n {
                    kkt[(n + i, j)] = a[i][j];
                    kkt[(j, n + i)] = a[i][j];
                }
            }
            let mut rhs = DVector::zeros(n + m);
            for j in 0..n {
                rhs[j] = -q[j];
            }
            for i in 0..m {
                rhs[n + i] = b[i];
            }
            let direct = kkt.lu().solve(&rhs).unwrap();
            let p = problem(h, q, a, b, vec![], vec![], None);
            let sol = solve_qp(&p).unwrap();
            for j in 0..n {
                assert!((sol.x[j] - direct[j]).abs() <= 1e-9);
            }
            assert!(kkt_report(&p, &sol).unwrap().within(1e-9, 1e-10));
        }
    }

    #[test]
    fn single_bound_becomes_active() {
        // min (x-2)² s.t. x ≤ 1
        let p = problem(
            DMatrix::from_element(1, 1, 2.0),
            vec![-4.0],
            vec![],
            vec![],
            vec![vec![1.0]],
            vec![1.0],
            Some(vec![0.0]),
        );
        let sol = solve_qp(&p).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.multipliers[0] - 2.0).abs() < 1e-12);
        assert!((sol.objective - (-3.0)).abs() < 1e-12);
    }

    #[test]
    fn infeasible_start_names_worst_row() {
        let p = problem(
            DMatrix::identity(2, 2),
            vec![0.0, 0.0],
            vec![],
            vec![],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![-0.1, -0.5],
            None,
        );
        match solve_qp(&p) {
            Err(QpError::Infeasible { row, violation, .. }) => {
                assert_eq!(row, 1);
                assert!((violation - 0.5).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dependent_equalities_rejected() {
        let s = QpStructure::new(
            DMatrix::identity(3, 3),
            SparseRows::from_dense(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]]),
        )
        .unwrap();
        assert!(matches!(s.reduced_dim(), Err(QpError::EqualityRankDeficient { .. })));
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Many rows meet at the optimum; min ‖x − (1,1)‖² over x ≤ 0, y ≤ 0,
        // x + y ≤ 0, x − y ≤ 0, −x + y ≤ 0 starting at the degenerate vertex.
        let rows = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
        ];
        let p = problem(DMatrix::identity(2, 2) * 2.0, vec![-2.0, -2.0], vec![], vec![], rows, vec![0.0; 5], Some(vec![0.0, 0.0]));
        let sol = solve_qp(&p).unwrap();
        assert!(sol.x.iter().all(|v| v.abs() < 1e-12));
        assert!(kkt_report(&p, &sol).unwrap().within(1e-9, 1e-12));
    }

    /// Projected-gradient oracle on a QP with simple bounds, in the spirit of
    /// a long-horizon first-order method.
    fn box_pg_oracle(h: &DMatrix<f64>, q: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
        let n = q.len();
        let step = 1.0 / h.symmetric_eigenvalues().amax();
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[i] = 0.0f64.clamp(lo[i], hi[i]);
        }
        for _ in 0..200_000 {
            let xv = DVector::from_column_slice(&x);
            let g = h * &xv + DVector::from_column_slice(q);
            for i in 0..n {
                x[i] = (x[i] - step * g[i]).clamp(lo[i], hi[i]);
            }
        }
        x
    }

    #[test]
    fn box_qp_matches_projected_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let n = 6;
            let h = random_spd(&mut rng, n);
            let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let lo = vec![-0.5; n];
            let hi = vec![0.7; n];
            let mut rows = Vec::new();
            let mut rhs = Vec::new();
            for i in 0..n {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                rows.push(e.clone());
                rhs.push(hi[i]);
                e[i] = -1.0;
                rows.push(e);
                rhs.push(-lo[i]);
            }
            let p = problem(h.clone(), q.clone(), vec![], vec![], rows, rhs, Some(vec![0.0; n]));
            let sol = solve_qp(&p).unwrap();
            let oracle = box_pg_oracle(&h, &q, &lo, &hi);
            let f_oracle = p.objective(&oracle);
            assert!((sol.objective - f_oracle).abs() <= 1e-9, "{} vs {}", sol.objective, f_oracle);
        }
    }
}
