//! Exact planar primitives: convex polygon clipping, overlay areas,
//! point location and segment arithmetic.
//!
//! Everything operates on counterclockwise convex polygons. Overlay
//! areas are computed by Sutherland-Hodgman clipping so that L1
//! distances between piecewise-constant fields carry no quadrature
//! noise.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, t: f64) -> Point {
        Point::new(self.x * t, self.y * t)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        self.sub(o).norm()
    }

    /// Rotate by -90 degrees: for a CCW polygon side this is the outward normal direction.
    pub fn outward_normal_dir(self) -> Point {
        Point::new(self.y, -self.x)
    }

    pub fn normalize(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn max_extent(&self) -> f64 {
        self.width().max(self.height())
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// Half-open membership, used when assigning atoms to partition cells.
    pub fn contains_half_open(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }

    /// Dilation by `d` in the sup norm (rectangle dilation).
    pub fn dilate(&self, d: f64) -> Rect {
        Rect::new(self.x0 - d, self.y0 - d, self.x1 + d, self.y1 + d)
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x0, self.y0),
            Point::new(self.x1, self.y0),
            Point::new(self.x1, self.y1),
            Point::new(self.x0, self.y1),
        ]
    }

    pub fn to_polygon(&self) -> Vec<Point> {
        self.corners().to_vec()
    }

    pub fn diam(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

/// Signed area of a polygon (positive for CCW orientation).
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut a = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        a += p.cross(q);
    }
    0.5 * a
}

/// Drop consecutive (near-)duplicate vertices so no polygon carries
/// zero-length sides.
fn dedup_ring(mut out: Vec<Point>) -> Vec<Point> {
    if out.len() < 2 {
        return out;
    }
    let scale = out
        .iter()
        .map(|p| p.x.abs().max(p.y.abs()))
        .fold(1.0, f64::max);
    let tol = 1e-14 * scale;
    let mut pruned: Vec<Point> = Vec::with_capacity(out.len());
    for p in out.drain(..) {
        if pruned.last().map_or(true, |q| q.dist(p) > tol) {
            pruned.push(p);
        }
    }
    while pruned.len() >= 2 && pruned[0].dist(*pruned.last().unwrap()) <= tol {
        pruned.pop();
    }
    pruned
}

/// Clip a polygon against the half-plane { p : dot(p, n) <= c }.
/// Output keeps the winding of the input.
pub fn clip_half_plane(poly: &[Point], n: Point, c: f64) -> Vec<Point> {
    let len = poly.len();
    let mut out = Vec::with_capacity(len + 2);
    if len == 0 {
        return out;
    }
    for i in 0..len {
        let p = poly[i];
        let q = poly[(i + 1) % len];
        let dp = p.dot(n) - c;
        let dq = q.dot(n) - c;
        if dp <= 0.0 {
            out.push(p);
            if dq > 0.0 {
                let t = dp / (dp - dq);
                out.push(p.add(q.sub(p).scale(t)));
            }
        } else if dq <= 0.0 {
            let t = dp / (dp - dq);
            out.push(p.add(q.sub(p).scale(t)));
        }
    }
    dedup_ring(out)
}

/// Intersection of a polygon with a convex CCW clip polygon (Sutherland-Hodgman).
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut out = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        // inside = left of a->b for CCW clip
        let dir = b.sub(a);
        let nrm = Point::new(dir.y, -dir.x); // outward
        let c = nrm.dot(a);
        out = clip_half_plane(&out, nrm, c);
    }
    out
}

pub fn clip_to_rect(subject: &[Point], r: &Rect) -> Vec<Point> {
    clip_convex(subject, &r.to_polygon())
}

/// Area of the intersection of two convex polygons.
pub fn intersection_area(a: &[Point], b: &[Point]) -> f64 {
    polygon_area(&clip_convex(a, b)).abs()
}

/// Location of a point relative to a convex CCW polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// Point-in-convex-polygon with an explicit boundary band of half-width `tol`.
pub fn locate_in_convex(p: Point, poly: &[Point], tol: f64) -> Location {
    let n = poly.len();
    let mut on_boundary = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a.dist(b) <= tol {
            continue; // degenerate side carries no information
        }
        let s = b.sub(a).cross(p.sub(a));
        // s > 0: left of edge (inside for CCW)
        let scale = b.sub(a).norm();
        if s < -tol * scale {
            return Location::Outside;
        }
        if s.abs() <= tol * scale {
            // within the band of the supporting line; confine to the segment's span
            let t = p.sub(a).dot(b.sub(a));
            if t >= -tol * scale && t <= scale * scale + tol * scale {
                on_boundary = true;
            }
        }
    }
    if on_boundary {
        Location::Boundary
    } else {
        Location::Inside
    }
}

/// Overlap of two collinear segments; returns the shared sub-segment if its
/// length exceeds `tol`.
pub fn collinear_overlap(
    a0: Point,
    a1: Point,
    b0: Point,
    b1: Point,
    tol: f64,
) -> Option<(Point, Point)> {
    let d = a1.sub(a0);
    let len = d.norm();
    if len <= tol {
        return None;
    }
    let dir = d.scale(1.0 / len);
    // must be collinear: both b endpoints on the supporting line of a
    if dir.cross(b0.sub(a0)).abs() > tol || dir.cross(b1.sub(a0)).abs() > tol {
        return None;
    }
    let ta0 = 0.0f64;
    let ta1 = len;
    let tb0 = dir.dot(b0.sub(a0));
    let tb1 = dir.dot(b1.sub(a0));
    let (lb, ub) = if tb0 <= tb1 { (tb0, tb1) } else { (tb1, tb0) };
    let lo = ta0.max(lb);
    let hi = ta1.min(ub);
    if hi - lo <= tol {
        return None;
    }
    Some((a0.add(dir.scale(lo)), a0.add(dir.scale(hi))))
}

/// Clip the segment [p, q] to a rectangle; returns the retained length.
pub fn segment_length_in_rect(p: Point, q: Point, r: &Rect) -> f64 {
    let d = q.sub(p);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    let checks = [
        (-d.x, p.x - r.x0),
        (d.x, r.x1 - p.x),
        (-d.y, p.y - r.y0),
        (d.y, r.y1 - p.y),
    ];
    for (den, num) in checks {
        if den.abs() < 1e-300 {
            if num < 0.0 {
                return 0.0;
            }
            continue;
        }
        let t = num / den;
        if den < 0.0 {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
    }
    if t1 <= t0 {
        0.0
    } else {
        (t1 - t0) * d.norm()
    }
}

/// Distance from a point to a segment.
pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let d = b.sub(a);
    let l2 = d.dot(d);
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(d) / l2).clamp(0.0, 1.0);
    p.dist(a.add(d.scale(t)))
}

/// Euclidean distance from a point to a rectangle (0 inside).
pub fn dist_point_rect(p: Point, r: &Rect) -> f64 {
    let dx = (r.x0 - p.x).max(0.0).max(p.x - r.x1);
    let dy = (r.y0 - p.y).max(0.0).max(p.y - r.y1);
    dx.hypot(dy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_square_by_half_plane() {
        let sq = Rect::new(0.0, 0.0, 1.0, 1.0).to_polygon();
        // keep x <= 0.5
        let left = clip_half_plane(&sq, Point::new(1.0, 0.0), 0.5);
        assert!((polygon_area(&left) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn overlay_area_of_shifted_squares() {
        let a = Rect::new(0.0, 0.0, 1.0, 1.0).to_polygon();
        let b = Rect::new(0.25, 0.25, 1.25, 1.25).to_polygon();
        assert!((intersection_area(&a, &b) - 0.5625).abs() < 1e-14);
    }

    #[test]
    fn collinear_overlap_partial() {
        let got = collinear_overlap(
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(3.0, 0.0),
            1e-12,
        )
        .unwrap();
        assert!((got.0.x - 1.0).abs() < 1e-14 && (got.1.x - 2.0).abs() < 1e-14);
    }

    #[test]
    fn locate_boundary_band() {
        let sq = Rect::new(0.0, 0.0, 1.0, 1.0).to_polygon();
        assert_eq!(
            locate_in_convex(Point::new(0.5, 0.5), &sq, 1e-12),
            Location::Inside
        );
        assert_eq!(
            locate_in_convex(Point::new(0.5, 0.0), &sq, 1e-12),
            Location::Boundary
        );
        assert_eq!(
            locate_in_convex(Point::new(1.5, 0.5), &sq, 1e-12),
            Location::Outside
        );
    }

    #[test]
    fn segment_clip_length() {
        let r = Rect::new(0.0, 0.0, 1.0, 1.0);
        let l = segment_length_in_rect(Point::new(-1.0, 0.5), Point::new(2.0, 0.5), &r);
        assert!((l - 1.0).abs() < 1e-14);
    }
}
