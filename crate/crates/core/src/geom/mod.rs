//! Planar vectors, axis-aligned boxes and segment proximity queries.

mod gjk;

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub use gjk::closest_point_to_origin;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(
    from = "[T; 2]",
    into = "[T; 2]",
    bound(serialize = "T: Serialize + Copy", deserialize = "T: Deserialize<'de>")
)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T> From<[T; 2]> for Vec2<T> {
    fn from([x, y]: [T; 2]) -> Self {
        Vec2 { x, y }
    }
}

impl<T> From<Vec2<T>> for [T; 2] {
    fn from(v: Vec2<T>) -> Self {
        [v.x, v.y]
    }
}

impl<T: Scalar> Vec2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2::new(T::zero(), T::zero())
    }

    pub fn splat(v: T) -> Self {
        Vec2::new(v, v)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn norm_inf(self) -> T {
        self.x.abs().max(self.y.abs())
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, to: Self, t: T) -> Self {
        self + (to - self) * t
    }

    pub fn min(self, o: Self) -> Self {
        Vec2::new(self.x.min(o.x), self.y.min(o.y))
    }

    pub fn max(self, o: Self) -> Self {
        Vec2::new(self.x.max(o.x), self.y.max(o.y))
    }

    pub fn axis(self, axis: usize) -> T {
        match axis {
            0 => self.x,
            _ => self.y,
        }
    }

    pub fn cast<U: Scalar>(self) -> Vec2<U> {
        Vec2::new(
            U::from(self.x).expect("castable"),
            U::from(self.y).expect("castable"),
        )
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> AddAssign for Vec2<T> {
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl<T: Scalar> SubAssign for Vec2<T> {
    fn sub_assign(&mut self, o: Self) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl<T: Scalar> Div<T> for Vec2<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize + Copy", deserialize = "T: Deserialize<'de>"))]
pub struct Aabb<T> {
    pub min: Vec2<T>,
    pub max: Vec2<T>,
}

impl<T: Scalar> Aabb<T> {
    pub fn new(min: Vec2<T>, max: Vec2<T>) -> Self {
        Aabb { min, max }
    }

    pub fn from_center(center: Vec2<T>, half: Vec2<T>) -> Self {
        Aabb::new(center - half, center + half)
    }

    /// Smallest box containing every point. `None` for an empty slice.
    pub fn bounding(points: &[Vec2<T>]) -> Option<Self> {
        let first = *points.first()?;
        Some(points.iter().fold(Aabb::new(first, first), |b, &p| {
            Aabb::new(b.min.min(p), b.max.max(p))
        }))
    }

    pub fn width(&self) -> T {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> T {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn center(&self) -> Vec2<T> {
        (self.min + self.max) * T::half()
    }

    pub fn contains(&self, p: Vec2<T>, tol: T) -> bool {
        p.x >= self.min.x - tol
            && p.x <= self.max.x + tol
            && p.y >= self.min.y - tol
            && p.y <= self.max.y + tol
    }

    pub fn contains_box(&self, o: &Aabb<T>, tol: T) -> bool {
        self.contains(o.min, tol) && self.contains(o.max, tol)
    }

    /// Signed Euclidean distance from `p` to the box: positive outside,
    /// negative (depth to the nearest face) inside.
    pub fn signed_distance(&self, p: Vec2<T>) -> T {
        let dx = (self.min.x - p.x).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(p.y - self.max.y);
        if dx <= T::zero() && dy <= T::zero() {
            dx.max(dy)
        } else {
            Vec2::new(dx.max(T::zero()), dy.max(T::zero())).norm()
        }
    }

    /// Euclidean gap between two boxes, zero when they touch or overlap.
    pub fn distance_to(&self, o: &Aabb<T>) -> T {
        let dx = (o.min.x - self.max.x).max(self.min.x - o.max.x).max(T::zero());
        let dy = (o.min.y - self.max.y).max(self.min.y - o.max.y).max(T::zero());
        Vec2::new(dx, dy).norm()
    }

    pub fn intersects(&self, o: &Aabb<T>) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }

    pub fn clamp_to(&self, outer: &Aabb<T>) -> Aabb<T> {
        Aabb::new(self.min.max(outer.min), self.max.min(outer.max))
    }
}

/// Closest point to `p` on the segment `a`–`b`, returned with its parameter in
/// `[0, 1]`. A degenerate segment returns `a` with parameter zero.
pub fn closest_on_segment<T: Scalar>(a: Vec2<T>, b: Vec2<T>, p: Vec2<T>) -> (T, Vec2<T>) {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq <= T::zero() {
        return (T::zero(), a);
    }
    let t = ((p - a).dot(ab) / len_sq).max(T::zero()).min(T::one());
    (t, a + ab * t)
}

pub fn distance_to_segment<T: Scalar>(a: Vec2<T>, b: Vec2<T>, p: Vec2<T>) -> T {
    (closest_on_segment(a, b, p).1 - p).norm()
}

/// Closest pair between two segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPair<T> {
    /// Parameter along the first segment.
    pub s: T,
    /// Parameter along the second segment.
    pub t: T,
    pub on_first: Vec2<T>,
    pub on_second: Vec2<T>,
}

impl<T: Scalar> SegmentPair<T> {
    pub fn distance(&self) -> T {
        (self.on_first - self.on_second).norm()
    }
}

fn segments_cross<T: Scalar>(p0: Vec2<T>, p1: Vec2<T>, q0: Vec2<T>, q1: Vec2<T>) -> Option<(T, T)> {
    let r = p1 - p0;
    let s = q1 - q0;
    let denom = r.cross(s);
    if denom == T::zero() {
        return None;
    }
    let qp = q0 - p0;
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    let unit = |v: T| v >= T::zero() && v <= T::one();
    (unit(t) && unit(u)).then_some((t, u))
}

/// Closest points between segments `p0`–`p1` and `q0`–`q1`.
///
/// When several pairs attain the minimum (parallel overlap), the pair with the
/// smallest parameter on the first segment is returned, then the smallest on
/// the second. Degenerate segments reduce to point queries.
pub fn closest_between_segments<T: Scalar>(
    p0: Vec2<T>,
    p1: Vec2<T>,
    q0: Vec2<T>,
    q1: Vec2<T>,
) -> SegmentPair<T> {
    if let Some((s, t)) = segments_cross(p0, p1, q0, q1) {
        let on_first = p0.lerp(p1, s);
        return SegmentPair { s, t, on_first, on_second: on_first };
    }
    // Non-crossing planar segments attain their minimum distance at an endpoint
    // of one of them, so four point-to-segment queries cover every candidate.
    let mut cands: [SegmentPair<T>; 4] = [SegmentPair {
        s: T::zero(),
        t: T::zero(),
        on_first: p0,
        on_second: q0,
    }; 4];
    for (i, (s, p)) in [(T::zero(), p0), (T::one(), p1)].into_iter().enumerate() {
        let (t, q) = closest_on_segment(q0, q1, p);
        cands[i] = SegmentPair { s, t, on_first: p, on_second: q };
    }
    for (i, (t, q)) in [(T::zero(), q0), (T::one(), q1)].into_iter().enumerate() {
        let (s, p) = closest_on_segment(p0, p1, q);
        cands[2 + i] = SegmentPair { s, t, on_first: p, on_second: q };
    }
    let best = cands
        .iter()
        .map(|c| c.distance())
        .fold(T::infinity(), |a, b| a.min(b));
    let slack = T::lit(1e-12) * (T::one() + best);
    let mut chosen: Option<SegmentPair<T>> = None;
    for c in cands {
        if c.distance() > best + slack {
            continue;
        }
        chosen = match chosen {
            None => Some(c),
            Some(cur) if (c.s, c.t) < (cur.s, cur.t) => Some(c),
            keep => keep,
        };
    }
    chosen.expect("at least one candidate attains the minimum")
}
