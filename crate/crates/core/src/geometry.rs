//! Planar geometry helpers shared by the track, vehicle and rules code.

use nalgebra::Vector2;
use std::f64::consts::PI;

pub type Point = Vector2<f64>;

/// Wraps an angle into `(-PI, PI]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Unit vector pointing along `heading`.
#[inline]
pub fn direction(heading: f64) -> Point {
    Point::new(heading.cos(), heading.sin())
}

/// Left-hand normal of `heading`.
#[inline]
pub fn left_normal(heading: f64) -> Point {
    Point::new(-heading.sin(), heading.cos())
}

#[inline]
pub fn cross(a: &Point, b: &Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Closest point on segment `[a, b]` to `p`, as the clamped segment
/// parameter and the point itself.
pub fn project_on_segment(p: &Point, a: &Point, b: &Point) -> (f64, Point) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (0.0, *a);
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (t, a + ab * t)
}

/// Radius of the circle through three points; infinite when collinear.
pub fn circumradius(a: &Point, b: &Point, c: &Point) -> f64 {
    let ab = (b - a).norm();
    let bc = (c - b).norm();
    let ca = (a - c).norm();
    let area2 = cross(&(b - a), &(c - a)).abs();
    if area2 <= 1e-12 * (ab * bc).max(1e-300) {
        return f64::INFINITY;
    }
    ab * bc * ca / (2.0 * area2)
}

/// Proper or touching intersection test for two closed segments.
pub fn segments_intersect(p1: &Point, p2: &Point, q1: &Point, q2: &Point) -> bool {
    fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
        cross(&(b - a), &(c - a))
    }
    fn on_segment(a: &Point, b: &Point, p: &Point) -> bool {
        p.x >= a.x.min(b.x) - 1e-12
            && p.x <= a.x.max(b.x) + 1e-12
            && p.y >= a.y.min(b.y) - 1e-12
            && p.y <= a.y.max(b.y) + 1e-12
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Parameter interval `[t0, t1]` where the ray `origin + t * dir` (unit
/// `dir`) lies inside the disc.
pub fn ray_disc(origin: &Point, dir: &Point, center: &Point, radius: f64) -> Option<(f64, f64)> {
    let oc = origin - center;
    let b = oc.dot(dir);
    let c = oc.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some((-b - s, -b + s))
}

/// A rectangle with arbitrary orientation: the kart footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Point,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedBox {
    fn axes(&self) -> (Point, Point) {
        (direction(self.heading), left_normal(self.heading))
    }

    /// Coordinates of `p` in the box frame (longitudinal, lateral).
    pub fn to_local(&self, p: &Point) -> Point {
        let (u, n) = self.axes();
        let d = p - self.center;
        Point::new(d.dot(&u), d.dot(&n))
    }

    /// Euclidean distance from `p` to the rectangle, 0 inside.
    pub fn distance_to(&self, p: &Point) -> f64 {
        let l = self.to_local(p);
        let dx = (l.x.abs() - self.half_length).max(0.0);
        let dy = (l.y.abs() - self.half_width).max(0.0);
        dx.hypot(dy)
    }

    pub fn contains(&self, p: &Point) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.half_length && l.y.abs() <= self.half_width
    }

    /// Parameter interval of the full line `origin + t * dir` inside the box
    /// (slab method); `t` may be negative.
    pub fn ray_interval(&self, origin: &Point, dir: &Point) -> Option<(f64, f64)> {
        let o = self.to_local(origin);
        let (u, n) = self.axes();
        let d = Point::new(dir.dot(&u), dir.dot(&n));
        let mut t_min = f64::NEG_INFINITY;
        let mut t_max = f64::INFINITY;
        for (oc, dc, h) in [(o.x, d.x, self.half_length), (o.y, d.y, self.half_width)] {
            if dc.abs() < 1e-15 {
                if oc.abs() > h {
                    return None;
                }
            } else {
                let a = (-h - oc) / dc;
                let b = (h - oc) / dc;
                t_min = t_min.max(a.min(b));
                t_max = t_max.min(a.max(b));
            }
        }
        (t_max >= t_min).then_some((t_min, t_max))
    }

    /// Distance along the unit ray to the first boundary hit. An origin
    /// inside the box reports 0.
    pub fn ray_hit(&self, origin: &Point, dir: &Point) -> Option<f64> {
        let (t_min, t_max) = self.ray_interval(origin, dir)?;
        if t_max < 0.0 {
            return None;
        }
        Some(t_min.max(0.0))
    }

    pub fn corners(&self) -> [Point; 4] {
        let (u, n) = self.axes();
        let a = u * self.half_length;
        let b = n * self.half_width;
        [
            self.center + a + b,
            self.center + a - b,
            self.center - a - b,
            self.center - a + b,
        ]
    }

    /// Separating-axis overlap test. Returns the minimum-translation axis
    /// (pointing from `self` towards `other`) and the penetration depth.
    pub fn penetration(&self, other: &OrientedBox) -> Option<(Point, f64)> {
        let (u1, n1) = self.axes();
        let (u2, n2) = other.axes();
        let ca = self.corners();
        let cb = other.corners();
        let mut best: Option<(Point, f64)> = None;
        for axis in [u1, n1, u2, n2] {
            let (amin, amax) = project_range(&ca, &axis);
            let (bmin, bmax) = project_range(&cb, &axis);
            let overlap = amax.min(bmax) - amin.max(bmin);
            if overlap <= 0.0 {
                return None;
            }
            if best.is_none_or(|(_, d)| overlap < d) {
                best = Some((axis, overlap));
            }
        }
        best.map(|(axis, depth)| {
            let towards = other.center - self.center;
            if towards.dot(&axis) < 0.0 {
                (-axis, depth)
            } else {
                (axis, depth)
            }
        })
    }
}

fn project_range(corners: &[Point; 4], axis: &Point) -> (f64, f64) {
    corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
        let p = c.dot(axis);
        (lo.min(p), hi.max(p))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!(wrap_angle(0.5).eq(&0.5));
        assert!((wrap_angle(-0.5 - 4.0 * PI) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn circumradius_of_circle_points() {
        let r = 7.5;
        let pts: Vec<Point> = [0.1, 0.7, 1.9].iter().map(|a: &f64| Point::new(r * a.cos(), r * a.sin())).collect();
        assert!((circumradius(&pts[0], &pts[1], &pts[2]) - r).abs() < 1e-9);
        let line = circumradius(&Point::new(0.0, 0.0), &Point::new(1.0, 0.0), &Point::new(2.0, 0.0));
        assert!(line.is_infinite());
    }

    #[test]
    fn box_distance_and_ray() {
        let b = OrientedBox { center: Point::new(5.0, 0.0), heading: 0.0, half_length: 0.5, half_width: 0.4 };
        assert!((b.distance_to(&Point::new(0.5, 0.0)) - 4.0).abs() < 1e-12);
        assert_eq!(b.distance_to(&Point::new(5.1, 0.1)), 0.0);
        let t = b.ray_hit(&Point::new(0.0, 0.0), &Point::new(1.0, 0.0)).unwrap();
        assert!((t - 4.5).abs() < 1e-12);
        assert!(b.ray_hit(&Point::new(0.0, 0.0), &Point::new(-1.0, 0.0)).is_none());
        assert!(b.ray_hit(&Point::new(0.0, 0.0), &Point::new(0.0, 1.0)).is_none());
    }

    #[test]
    fn overlap_axis_points_away() {
        let a = OrientedBox { center: Point::new(0.0, 0.0), heading: 0.0, half_length: 1.0, half_width: 0.5 };
        let b = OrientedBox { center: Point::new(1.5, 0.0), heading: 0.0, half_length: 1.0, half_width: 0.5 };
        let (axis, depth) = a.penetration(&b).unwrap();
        assert!((depth - 0.5).abs() < 1e-12);
        assert!(axis.x > 0.99);
        let c = OrientedBox { center: Point::new(3.0, 0.0), ..b };
        assert!(a.penetration(&c).is_none());
    }

    #[test]
    fn crossing_segments() {
        let p = |x, y| Point::new(x, y);
        assert!(segments_intersect(&p(0.0, 0.0), &p(2.0, 2.0), &p(0.0, 2.0), &p(2.0, 0.0)));
        assert!(!segments_intersect(&p(0.0, 0.0), &p(1.0, 0.0), &p(0.0, 1.0), &p(1.0, 1.0)));
        assert!(segments_intersect(&p(0.0, 0.0), &p(1.0, 0.0), &p(1.0, 0.0), &p(1.0, 1.0)));
    }
}
