//! Piecewise Bernstein polynomial curves in the plane.
//!
//! A trajectory is `M` consecutive segments of degree `n`, each lasting `dt`
//! seconds. Time is handled as a step index plus an in-segment fraction so that
//! long runs never accumulate rounding from repeated `dt` additions; seconds
//! appear only at the public boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;
use crate::scalar::Scalar;

/// Smallest admissible polynomial degree for a planned trajectory.
pub const MIN_DEGREE: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BernsteinError {
    #[error("time {t} outside trajectory domain [{start}, {end}]")]
    Domain { t: f64, start: f64, end: f64 },
    #[error("control grid shape mismatch: {segments} segments of degree {degree} need {expected} points, got {got}")]
    Shape {
        segments: usize,
        degree: usize,
        expected: usize,
        got: usize,
    },
    #[error("trajectory needs degree >= {MIN_DEGREE}, got {0}")]
    DegreeTooLow(usize),
    #[error("derivative order {order} exceeds degree {degree}")]
    OrderTooHigh { order: usize, degree: usize },
    #[error("segment duration must be positive and finite")]
    BadDuration,
    #[error("control point is not finite")]
    NonFinite,
}

/// `M × (n+1)` control points, stored segment-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGrid<T> {
    points: Vec<Vec2<T>>,
    segments: usize,
    degree: usize,
    dt: T,
    start_step: u64,
}

impl<T: Scalar> ControlGrid<T> {
    pub fn new(
        segments: usize,
        degree: usize,
        dt: T,
        start_step: u64,
        points: Vec<Vec2<T>>,
    ) -> Result<Self, BernsteinError> {
        let expected = segments * (degree + 1);
        if segments == 0 || points.len() != expected {
            return Err(BernsteinError::Shape {
                segments,
                degree,
                expected,
                got: points.len(),
            });
        }
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(BernsteinError::BadDuration);
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(BernsteinError::NonFinite);
        }
        Ok(ControlGrid {
            points,
            segments,
            degree,
            dt,
            start_step,
        })
    }

    pub fn constant(p: Vec2<T>, segments: usize, degree: usize, dt: T, start_step: u64) -> Result<Self, BernsteinError> {
        Self::new(segments, degree, dt, start_step, vec![p; segments * (degree + 1)])
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn start_step(&self) -> u64 {
        self.start_step
    }

    pub fn start_time(&self) -> T {
        T::from_u64(self.start_step).expect("step fits") * self.dt
    }

    pub fn end_time(&self) -> T {
        T::from_u64(self.start_step + self.segments as u64).expect("step fits") * self.dt
    }

    /// Control point `l` of segment `m`, both zero-based.
    pub fn point(&self, m: usize, l: usize) -> Vec2<T> {
        self.points[m * (self.degree + 1) + l]
    }

    pub fn segment(&self, m: usize) -> &[Vec2<T>] {
        let w = self.degree + 1;
        &self.points[m * w..(m + 1) * w]
    }

    pub fn points(&self) -> &[Vec2<T>] {
        &self.points
    }

    pub fn first(&self) -> Vec2<T> {
        self.points[0]
    }

    pub fn last(&self) -> Vec2<T> {
        *self.points.last().expect("non-empty grid")
    }

    /// Positions at the `M + 1` segment boundaries.
    pub fn knots(&self) -> Vec<Vec2<T>> {
        let mut out: Vec<_> = (0..self.segments).map(|m| self.point(m, 0)).collect();
        out.push(self.last());
        out
    }

    /// Forward differences scaled by `degree / dt`: the control points of the
    /// derivative curve, one degree lower.
    pub fn differentiate(&self) -> Result<ControlGrid<T>, BernsteinError> {
        if self.degree == 0 {
            return Err(BernsteinError::OrderTooHigh { order: 1, degree: 0 });
        }
        let scale = T::from_count(self.degree) / self.dt;
        let mut pts = Vec::with_capacity(self.segments * self.degree);
        for m in 0..self.segments {
            let seg = self.segment(m);
            pts.extend(seg.windows(2).map(|w| (w[1] - w[0]) * scale));
        }
        ControlGrid::new(self.segments, self.degree - 1, self.dt, self.start_step, pts)
    }

    /// Evaluates segment `m` at fraction `s ∈ [0, 1]` by de Casteljau.
    pub fn eval_segment(&self, m: usize, s: T) -> Vec2<T> {
        de_casteljau(self.segment(m), s)
    }

    /// Maps seconds to `(segment, fraction)`. Joint times resolve to the start
    /// of the later segment except at the very end of the domain.
    pub fn locate(&self, t: T) -> Result<(usize, T), BernsteinError> {
        let start = self.start_time();
        let end = self.end_time();
        let slack = T::lit(1e-9) * self.dt;
        if !(t >= start - slack && t <= end + slack) {
            return Err(BernsteinError::Domain {
                t: t.to_f64().unwrap_or(f64::NAN),
                start: start.to_f64().unwrap_or(f64::NAN),
                end: end.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut local = ((t - start) / self.dt).max(T::zero());
        // Joint times computed as k·dt land a few ulps off the integer.
        if (local - local.round()).abs() <= T::lit(1e-9) {
            local = local.round();
        }
        let raw = local.floor();
        let mut m = raw.to_usize().unwrap_or(0);
        let mut s = local - raw;
        if m >= self.segments {
            m = self.segments - 1;
            s = T::one();
        }
        Ok((m, s.min(T::one())))
    }

    pub fn evaluate(&self, t: T) -> Result<Vec2<T>, BernsteinError> {
        let (m, s) = self.locate(t)?;
        Ok(self.eval_segment(m, s))
    }
}

/// de Casteljau evaluation of one Bernstein segment. Handles any degree.
pub fn de_casteljau<T: Scalar>(ctrl: &[Vec2<T>], s: T) -> Vec2<T> {
    let mut buf: [Vec2<T>; 16] = [Vec2::zero(); 16];
    let n = ctrl.len();
    if n <= buf.len() {
        buf[..n].copy_from_slice(ctrl);
        reduce_in_place(&mut buf[..n], s)
    } else {
        let mut v = ctrl.to_vec();
        reduce_in_place(&mut v, s)
    }
}

fn reduce_in_place<T: Scalar>(pts: &mut [Vec2<T>], s: T) -> Vec2<T> {
    let one_minus = T::one() - s;
    for level in (1..pts.len()).rev() {
        for i in 0..level {
            pts[i] = pts[i] * one_minus + pts[i + 1] * s;
        }
    }
    pts[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Euclidean,
    Linf,
}

/// A planned multi-segment curve. Degree is at least [`MIN_DEGREE`].
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTrajectory<T> {
    control: ControlGrid<T>,
}

impl<T: Scalar> PiecewiseTrajectory<T> {
    pub fn new(control: ControlGrid<T>) -> Result<Self, BernsteinError> {
        if control.degree() < MIN_DEGREE {
            return Err(BernsteinError::DegreeTooLow(control.degree()));
        }
        Ok(PiecewiseTrajectory { control })
    }

    /// Curve parked at `p` for the whole horizon.
    pub fn stationary(p: Vec2<T>, segments: usize, degree: usize, dt: T, start_step: u64) -> Result<Self, BernsteinError> {
        Self::new(ControlGrid::constant(p, segments, degree, dt, start_step)?)
    }

    pub fn control(&self) -> &ControlGrid<T> {
        &self.control
    }

    pub fn into_control(self) -> ControlGrid<T> {
        self.control
    }

    pub fn segments(&self) -> usize {
        self.control.segments()
    }

    pub fn degree(&self) -> usize {
        self.control.degree()
    }

    pub fn evaluate(&self, t: T) -> Result<Vec2<T>, BernsteinError> {
        self.control.evaluate(t)
    }

    pub fn derivative_control_points(&self, order: usize) -> Result<ControlGrid<T>, BernsteinError> {
        if order > self.degree() {
            return Err(BernsteinError::OrderTooHigh {
                order,
                degree: self.degree(),
            });
        }
        let mut grid = self.control.clone();
        for _ in 0..order {
            grid = grid.differentiate()?;
        }
        Ok(grid)
    }

    /// Derivative of the given order evaluated at `t` seconds.
    pub fn evaluate_derivative(&self, order: usize, t: T) -> Result<Vec2<T>, BernsteinError> {
        self.derivative_control_points(order)?.evaluate(t)
    }

    /// Largest norm among the control points of the `order`-th derivative.
    /// By the convex-hull property this bounds the norm of the true curve
    /// derivative everywhere on the horizon.
    pub fn sample_extreme_norm(&self, order: usize, norm: NormKind) -> Result<T, BernsteinError> {
        let grid = self.derivative_control_points(order)?;
        Ok(grid
            .points()
            .iter()
            .map(|p| match norm {
                NormKind::Euclidean => p.norm(),
                NormKind::Linf => p.norm_inf(),
            })
            .fold(T::zero(), |a, b| a.max(b)))
    }

    /// Arc length of segment `m` by 8-point Gauss–Legendre on the speed.
    pub fn segment_arc_length(&self, m: usize) -> T {
        let vel = self.derivative_control_points(1).expect("degree >= 1");
        let dt = self.control.dt();
        GAUSS_LEGENDRE_8
            .iter()
            .map(|&(x, w)| {
                let s = T::lit(0.5 * (x + 1.0));
                vel.eval_segment(m, s).norm() * T::lit(0.5 * w)
            })
            .sum::<T>()
            * dt
    }
}

/// Nodes and weights on [-1, 1].
pub(crate) const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Flat serialisation of one agent's trajectory for the step log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub agent_id: usize,
    pub step: u64,
    pub dt: f64,
    pub segments: usize,
    pub degree: usize,
    /// Row-major: segment, then control point index.
    pub control_points: Vec<[f64; 2]>,
}

impl TrajectoryRecord {
    pub fn from_trajectory(agent_id: usize, traj: &PiecewiseTrajectory<f64>) -> Self {
        let c = traj.control();
        TrajectoryRecord {
            agent_id,
            step: c.start_step(),
            dt: c.dt(),
            segments: c.segments(),
            degree: c.degree(),
            control_points: c.points().iter().map(|&p| p.into()).collect(),
        }
    }

    pub fn to_trajectory(&self) -> Result<PiecewiseTrajectory<f64>, BernsteinError> {
        let pts = self.control_points.iter().map(|&p| Vec2::from(p)).collect();
        PiecewiseTrajectory::new(ControlGrid::new(self.segments, self.degree, self.dt, self.step, pts)?)
    }
}
