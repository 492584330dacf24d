//! Gilbert–Johnson–Keerthi distance from the origin to the convex hull of a
//! finite planar point set.

use super::{closest_on_segment, Vec2};
use crate::scalar::Scalar;

fn support<T: Scalar>(points: &[Vec2<T>], dir: Vec2<T>) -> Vec2<T> {
    // Minimises p·dir, i.e. the support point in direction -dir.
    let mut best = points[0];
    let mut best_val = best.dot(dir);
    for &p in &points[1..] {
        let v = p.dot(dir);
        if v < best_val {
            best = p;
            best_val = v;
        }
    }
    best
}

/// Reduces `simplex` to the smallest sub-simplex whose hull contains the point
/// closest to the origin and returns that point.
fn reduce<T: Scalar>(simplex: &mut Vec<Vec2<T>>) -> Vec2<T> {
    match simplex.len() {
        1 => simplex[0],
        2 => reduce_segment(simplex),
        _ => {
            let (a, b, c) = (simplex[0], simplex[1], simplex[2]);
            let area = (b - a).cross(c - a);
            if area != T::zero() {
                let o = Vec2::zero();
                let s1 = (b - a).cross(o - a);
                let s2 = (c - b).cross(o - b);
                let s3 = (a - c).cross(o - c);
                let inside = if area > T::zero() {
                    s1 >= T::zero() && s2 >= T::zero() && s3 >= T::zero()
                } else {
                    s1 <= T::zero() && s2 <= T::zero() && s3 <= T::zero()
                };
                if inside {
                    return Vec2::zero();
                }
            }
            let mut best: Option<(T, Vec<Vec2<T>>, Vec2<T>)> = None;
            for (p, q) in [(a, b), (b, c), (a, c)] {
                let mut edge = vec![p, q];
                let v = reduce_segment(&mut edge);
                let d = v.norm_sq();
                if best.as_ref().map_or(true, |(bd, _, _)| d < *bd) {
                    best = Some((d, edge, v));
                }
            }
            let (_, edge, v) = best.expect("three edges");
            *simplex = edge;
            v
        }
    }
}

fn reduce_segment<T: Scalar>(simplex: &mut Vec<Vec2<T>>) -> Vec2<T> {
    let (a, b) = (simplex[0], simplex[1]);
    let (t, p) = closest_on_segment(a, b, Vec2::zero());
    if t <= T::zero() {
        simplex.truncate(1);
    } else if t >= T::one() {
        simplex.swap(0, 1);
        simplex.truncate(1);
    }
    p
}

/// Point of `Conv(points)` nearest to the origin; zero when the hull contains
/// the origin. Panics on an empty slice.
pub fn closest_point_to_origin<T: Scalar>(points: &[Vec2<T>]) -> Vec2<T> {
    assert!(!points.is_empty(), "hull of an empty point set");
    let eps = T::epsilon() * T::lit(64.0);
    let mut simplex = vec![points[0]];
    let mut v = points[0];
    for _ in 0..(8 * points.len() + 16) {
        let vv = v.norm_sq();
        if vv == T::zero() {
            return v;
        }
        let w = support(points, v);
        if vv - v.dot(w) <= eps * vv || simplex.contains(&w) {
            return v;
        }
        simplex.push(w);
        let next = reduce(&mut simplex);
        if simplex.len() == 3 {
            return Vec2::zero();
        }
        if next.norm_sq() >= vv {
            // No strict progress: rounding floor reached.
            return v;
        }
        v = next;
    }
    v
}
