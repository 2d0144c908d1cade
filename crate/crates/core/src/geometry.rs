//! Planar geometry shared by the field, lattice and dynamics modules.
//!
//! Polygons are plain vertex slices. Routines that need convexity say so; all of
//! them expect counter-clockwise order.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self * (1.0 / n)
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn from_points<I: IntoIterator<Item = Vec2>>(points: I) -> Self {
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Self { min, max }
    }

    #[inline]
    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }

    pub fn translated(&self, d: Vec2) -> Aabb {
        Aabb { min: self.min + d, max: self.max + d }
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: Vec2::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            max: Vec2::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        }
    }

    pub fn inflated(&self, margin: f64) -> Aabb {
        Aabb {
            min: self.min - Vec2::new(margin, margin),
            max: self.max + Vec2::new(margin, margin),
        }
    }
}

/// Shoelace signed area; positive for counter-clockwise order.
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        acc += a.cross(b);
    }
    0.5 * acc
}

pub fn polygon_area(poly: &[Vec2]) -> f64 {
    signed_area(poly).abs()
}

/// Area centroid. Falls back to the vertex mean for degenerate input.
pub fn centroid(poly: &[Vec2]) -> Vec2 {
    let n = poly.len();
    let a = signed_area(poly);
    if n < 3 || a.abs() < 1e-300 {
        let sum = poly.iter().fold(Vec2::ZERO, |s, &p| s + p);
        return sum * (1.0 / n.max(1) as f64);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let w = p.cross(q);
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    Vec2::new(cx / (6.0 * a), cy / (6.0 * a))
}

/// Andrew's monotone chain. Returns the hull counter-clockwise without
/// collinear points.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    let push = |hull: &mut Vec<Vec2>, p: Vec2, floor: usize| {
        while hull.len() >= floor + 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if (b - a).cross(p - a) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    };
    for &p in &pts {
        push(&mut hull, p, 0);
    }
    let lower = hull.len() - 1;
    for &p in pts.iter().rev().skip(1) {
        push(&mut hull, p, lower);
    }
    hull.pop();
    hull
}

/// True when every turn is strictly to the left (CCW convex, no collinear runs).
pub fn is_convex_ccw(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        (b - a).cross(c - b) > 0.0
    })
}

fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (p2 - p1).cross(q1 - p1);
    let d2 = (p2 - p1).cross(q2 - p1);
    let d3 = (q2 - q1).cross(p1 - q1);
    let d4 = (q2 - q1).cross(p2 - q1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on_segment = |a: Vec2, b: Vec2, p: Vec2| {
        p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    };
    (d1 == 0.0 && on_segment(p1, p2, q1))
        || (d2 == 0.0 && on_segment(p1, p2, q2))
        || (d3 == 0.0 && on_segment(q1, q2, p1))
        || (d4 == 0.0 && on_segment(q1, q2, p2))
}

/// Quadratic check that no two non-adjacent edges touch.
pub fn is_simple(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a1, a2) = (poly[i], poly[(i + 1) % n]);
        if a1 == a2 {
            return false;
        }
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (b1, b2) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

/// Even-odd ray casting.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Sutherland–Hodgman against the half-plane `dot(normal, p) <= offset`.
pub fn clip_halfplane(poly: &[Vec2], normal: Vec2, offset: f64, out: &mut Vec<Vec2>) {
    out.clear();
    let n = poly.len();
    if n == 0 {
        return;
    }
    let mut prev = poly[n - 1];
    let mut prev_d = normal.dot(prev) - offset;
    for &cur in poly {
        let cur_d = normal.dot(cur) - offset;
        if cur_d <= 0.0 {
            if prev_d > 0.0 {
                let t = prev_d / (prev_d - cur_d);
                out.push(prev + (cur - prev) * t);
            }
            out.push(cur);
        } else if prev_d <= 0.0 {
            let t = prev_d / (prev_d - cur_d);
            out.push(prev + (cur - prev) * t);
        }
        prev = cur;
        prev_d = cur_d;
    }
}

/// Clip to the vertical strip `x0 <= x <= x1`.
pub fn clip_x_range(poly: &[Vec2], x0: f64, x1: f64, scratch: &mut Vec<Vec2>, out: &mut Vec<Vec2>) {
    clip_halfplane(poly, Vec2::new(1.0, 0.0), x1, scratch);
    clip_halfplane(scratch, Vec2::new(-1.0, 0.0), -x0, out);
}

/// Clip to the horizontal strip `y0 <= y <= y1`.
pub fn clip_y_range(poly: &[Vec2], y0: f64, y1: f64, scratch: &mut Vec<Vec2>, out: &mut Vec<Vec2>) {
    clip_halfplane(poly, Vec2::new(0.0, 1.0), y1, scratch);
    clip_halfplane(scratch, Vec2::new(0.0, -1.0), -y0, out);
}

/// Area of the intersection of two convex CCW polygons.
pub fn convex_intersection_area(a: &[Vec2], b: &[Vec2]) -> f64 {
    let mut cur: Vec<Vec2> = b.to_vec();
    let mut next = Vec::with_capacity(b.len() + a.len());
    let n = a.len();
    for i in 0..n {
        let p = a[i];
        let q = a[(i + 1) % n];
        // interior of a CCW polygon lies to the left of each edge
        let normal = Vec2::new(q.y - p.y, p.x - q.x);
        clip_halfplane(&cur, normal, normal.dot(p), &mut next);
        std::mem::swap(&mut cur, &mut next);
        if cur.len() < 3 {
            return 0.0;
        }
    }
    polygon_area(&cur)
}

/// Penetration between two convex polygons along their least-overlap axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    /// Unit axis pointing from the first polygon towards the second.
    pub normal: Vec2,
    pub depth: f64,
}

impl Contact {
    /// Translation that separates the second polygon from the first.
    pub fn mtv(&self) -> Vec2 {
        self.normal * self.depth
    }
}

fn project(poly: &[Vec2], axis: Vec2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &p in poly {
        let d = axis.dot(p);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (lo, hi)
}

/// Separating-axis test for convex polygons. `None` when they are separated
/// or merely touching.
pub fn sat_contact(a: &[Vec2], b: &[Vec2]) -> Option<Contact> {
    let mut best: Option<Contact> = None;
    for poly in [a, b] {
        let n = poly.len();
        for i in 0..n {
            let e = poly[(i + 1) % n] - poly[i];
            let axis = Vec2::new(e.y, -e.x).normalized();
            if axis == Vec2::ZERO {
                continue;
            }
            let (alo, ahi) = project(a, axis);
            let (blo, bhi) = project(b, axis);
            let forward = ahi - blo;
            let backward = bhi - alo;
            if forward <= 0.0 || backward <= 0.0 {
                return None;
            }
            let (depth, normal) = if forward <= backward { (forward, axis) } else { (backward, -axis) };
            if best.is_none_or(|c| depth < c.depth) {
                best = Some(Contact { normal, depth });
            }
        }
    }
    best
}

/// Rigid transform applied as rotate-then-translate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    pub rotation: f64,
    pub translation: Vec2,
}

impl Isometry {
    pub fn new(rotation: f64, translation: Vec2) -> Self {
        Self { rotation, translation }
    }

    pub fn apply_all(&self, pts: &[Vec2], out: &mut Vec<Vec2>) {
        let (s, c) = self.rotation.sin_cos();
        out.clear();
        out.extend(pts.iter().map(|p| Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y) + self.translation));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, s: f64) -> Vec<Vec2> {
        vec![Vec2::new(x0, y0), Vec2::new(x0 + s, y0), Vec2::new(x0 + s, y0 + s), Vec2::new(x0, y0 + s)]
    }

    #[test]
    fn shoelace_basics() {
        assert_eq!(polygon_area(&square(0.0, 0.0, 1.0)), 1.0);
        let tri = [Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(0.0, 2.0)];
        assert_eq!(polygon_area(&tri), 2.0);
        let mut cw = square(0.0, 0.0, 1.0);
        cw.reverse();
        assert!(signed_area(&cw) < 0.0);
    }

    #[test]
    fn hull_drops_interior_and_collinear() {
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(0.0, 2.0),
            Vec2::new(1.0, 1.0),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(is_convex_ccw(&h));
        assert_eq!(polygon_area(&h), 4.0);
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bow = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        assert!(!is_simple(&bow));
        assert!(is_simple(&square(0.0, 0.0, 1.0)));
    }

    #[test]
    fn sat_finds_shallow_axis() {
        let a = square(0.0, 0.0, 1.0);
        let b = square(0.9, 0.2, 1.0);
        let c = sat_contact(&a, &b).unwrap();
        assert!((c.depth - 0.1).abs() < 1e-12);
        assert!((c.normal - Vec2::new(1.0, 0.0)).norm() < 1e-12);
        assert!(sat_contact(&a, &square(1.0, 0.0, 1.0)).is_none());
        assert!(sat_contact(&a, &square(3.0, 0.0, 1.0)).is_none());
    }

    #[test]
    fn intersection_area_of_offset_squares() {
        let a = square(0.0, 0.0, 1.0);
        let b = square(0.5, 0.5, 1.0);
        assert!((convex_intersection_area(&a, &b) - 0.25).abs() < 1e-12);
        assert_eq!(convex_intersection_area(&a, &square(2.0, 2.0, 1.0)), 0.0);
    }

    #[test]
    fn strip_clip_halves_square() {
        let a = square(0.0, 0.0, 1.0);
        let (mut s, mut o) = (Vec::new(), Vec::new());
        clip_x_range(&a, 0.0, 0.5, &mut s, &mut o);
        assert!((polygon_area(&o) - 0.5).abs() < 1e-15);
    }
}
