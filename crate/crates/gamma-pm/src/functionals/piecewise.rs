//! Piecewise-constant functions: sorted breakpoints in 1D, convex
//! polygonal partitions of a rectangle in 2D. The jump set of a 2D
//! function is the derived list of shared edges between cells.

use crate::error::{Error, Result};
use crate::geometry::{
    clip_half_plane, collinear_overlap, intersection_area, locate_in_convex, polygon_area, Location,
    Point, Rect,
};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::BufWriter;
use std::path::Path;

/// 1D piecewise-constant function: values[k] on (breakpoints[k-1], breakpoints[k]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly1 {
    pub domain: (f64, f64),
    /// Strictly increasing interior breakpoints.
    pub breakpoints: Vec<f64>,
    /// Plateau values; length = breakpoints.len() + 1.
    pub values: Vec<f64>,
}

impl PiecewisePoly1 {
    pub fn new(domain: (f64, f64), breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::Domain(
                "need one more plateau value than breakpoints".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("breakpoints must be strictly increasing".into()));
        }
        if breakpoints
            .iter()
            .any(|&b| b <= domain.0 || b >= domain.1)
        {
            return Err(Error::Domain("breakpoints must be interior".into()));
        }
        Ok(PiecewisePoly1 {
            domain,
            breakpoints,
            values,
        })
    }

    pub fn constant(domain: (f64, f64), value: f64) -> Self {
        PiecewisePoly1 {
            domain,
            breakpoints: vec![],
            values: vec![value],
        }
    }

    /// Plateau value at t, with plateaus closed on the left: the value on
    /// [b_k, b_{k+1}) is values[k+1].
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= t);
        self.values[k]
    }

    /// (location, signed jump) per breakpoint, jump = right - left.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        self.breakpoints
            .iter()
            .enumerate()
            .map(|(k, &b)| (b, self.values[k + 1] - self.values[k]))
            .collect()
    }
}

/// One cell of a 2D partition: a convex CCW polygon with a constant value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub vertices: Vec<Point>,
    pub value: f64,
}

/// A shared edge between two cells.
#[derive(Debug, Clone)]
pub struct Edge {
    pub cell_a: usize,
    pub cell_b: usize,
    pub p0: Point,
    pub p1: Point,
    /// Unit normal pointing from cell_a into cell_b.
    pub normal: Point,
    pub length: f64,
}

impl Edge {
    /// |value_b - value_a|.
    pub fn jump(&self, u: &PiecewisePoly2) -> f64 {
        (u.cells[self.cell_b].value - u.cells[self.cell_a].value).abs()
    }

    /// Unit normal oriented toward the larger value (the orientation under
    /// which the vector jump measure is well defined). Zero jump keeps the
    /// a-to-b orientation.
    pub fn value_oriented_normal(&self, u: &PiecewisePoly2) -> Point {
        if u.cells[self.cell_b].value >= u.cells[self.cell_a].value {
            self.normal
        } else {
            self.normal.scale(-1.0)
        }
    }
}

/// A piecewise-constant function on a convex polygonal partition of a
/// rectangle. Gradient is identically zero inside each cell, so the whole
/// derivative lives on the shared edges.
#[derive(Debug, Clone)]
pub struct PiecewisePoly2 {
    pub domain: Rect,
    pub cells: Vec<Cell>,
    edges: Vec<Edge>,
    index: CellIndex,
}

/// Serialized form matches the partition file schema.
#[derive(Serialize, Deserialize)]
struct PartitionFile {
    domain: [f64; 4],
    cells: Vec<CellFile>,
}

#[derive(Serialize, Deserialize)]
struct CellFile {
    vertices: Vec<[f64; 2]>,
    value: f64,
}

impl PiecewisePoly2 {
    pub fn new(domain: Rect, cells: Vec<Cell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Geometry("partition needs at least one cell".into()));
        }
        let mut cells = cells;
        for c in &mut cells {
            if c.vertices.len() < 3 {
                return Err(Error::Geometry("cell with fewer than 3 vertices".into()));
            }
            if polygon_area(&c.vertices) < 0.0 {
                c.vertices.reverse();
            }
        }
        let index = CellIndex::build(&domain, &cells);
        let edges = derive_edges(&domain, &cells);
        Ok(PiecewisePoly2 {
            domain,
            cells,
            edges,
            index,
        })
    }

    pub fn constant(domain: Rect, value: f64) -> Self {
        Self::new(
            domain,
            vec![Cell {
                vertices: domain.to_polygon(),
                value,
            }],
        )
        .expect("rectangle cell is valid")
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Tiling and normal invariants; returns violations instead of failing
    /// so fixtures can report everything at once.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let tol = 1e-12 * self.domain.area().max(1.0);
        let total: f64 = self.cells.iter().map(|c| polygon_area(&c.vertices)).sum();
        if (total - self.domain.area()).abs() > tol {
            v.push(format!(
                "cells cover area {total}, domain area {}",
                self.domain.area()
            ));
        }
        for (i, a) in self.cells.iter().enumerate() {
            for (j, b) in self.cells.iter().enumerate().skip(i + 1) {
                if bbox_disjoint(&a.vertices, &b.vertices) {
                    continue;
                }
                let ov = intersection_area(&a.vertices, &b.vertices);
                if ov > tol {
                    v.push(format!("cells {i} and {j} overlap with area {ov}"));
                }
            }
        }
        for e in &self.edges {
            if (e.normal.norm() - 1.0).abs() > 1e-12 {
                v.push(format!("edge normal not unit: {:?}", e.normal));
            }
        }
        if self.values_non_finite() {
            v.push("non-finite cell value".into());
        }
        v
    }

    fn values_non_finite(&self) -> bool {
        self.cells.iter().any(|c| !c.value.is_finite())
    }

    /// Value at a point strictly inside a cell. Points on an edge (within
    /// a 1e-12-relative band) are reported as geometry errors so callers
    /// can apply their micro-shift rule.
    pub fn value_at(&self, p: Point) -> Result<f64> {
        let tol = 1e-12 * self.domain.max_extent().max(1.0);
        for &ci in self.index.candidates(p) {
            let c = &self.cells[ci as usize];
            match locate_in_convex(p, &c.vertices, tol) {
                Location::Inside => return Ok(c.value),
                Location::Boundary => {
                    return Err(Error::Geometry(format!(
                        "point ({}, {}) lies on a cell edge",
                        p.x, p.y
                    )))
                }
                Location::Outside => {}
            }
        }
        Err(Error::Geometry(format!(
            "point ({}, {}) outside the partition",
            p.x, p.y
        )))
    }

    /// Value lookup with the deterministic micro-shift rule for points
    /// that land exactly on a cell edge: the probe moves by 1e-9 of the
    /// domain extent per attempt, with unequal x/y increments so that no
    /// straight edge can track the shifted probe. Returns the value and
    /// the number of shifts applied.
    pub fn value_near(&self, p: Point) -> Result<(f64, usize)> {
        const RATIO: f64 = 1.618_033_988_749_895; // irrational slope
        let step = 1e-9 * self.domain.max_extent().max(1.0);
        for attempt in 0..4 {
            let q = Point::new(
                p.x + attempt as f64 * step,
                p.y + attempt as f64 * step * RATIO,
            );
            match self.value_at(q) {
                Ok(v) => return Ok((v, attempt)),
                Err(Error::Geometry(msg)) if msg.contains("edge") => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::Geometry(format!(
            "point ({}, {}) still on an edge after micro-shifts",
            p.x, p.y
        )))
    }

    /// Total jump length (H^1 measure of the jump set, counting only
    /// edges with a nonzero jump).
    pub fn jump_length(&self) -> f64 {
        self.edges
            .iter()
            .filter(|e| e.jump(self) > 0.0)
            .map(|e| e.length)
            .sum()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let f = PartitionFile {
            domain: [self.domain.x0, self.domain.y0, self.domain.x1, self.domain.y1],
            cells: self
                .cells
                .iter()
                .map(|c| CellFile {
                    vertices: c.vertices.iter().map(|p| [p.x, p.y]).collect(),
                    value: c.value,
                })
                .collect(),
        };
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(BufWriter::new(file), &f)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let f: PartitionFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let domain = Rect::new(f.domain[0], f.domain[1], f.domain[2], f.domain[3]);
        let cells = f
            .cells
            .into_iter()
            .map(|c| Cell {
                vertices: c.vertices.iter().map(|v| Point::new(v[0], v[1])).collect(),
                value: c.value,
            })
            .collect();
        Self::new(domain, cells)
    }

    /// Exact L1 distance to another partition over `window`, by convex
    /// polygon overlay.
    pub fn l1_distance(&self, other: &PiecewisePoly2, window: &Rect) -> f64 {
        let win = window.to_polygon();
        let mut total = 0.0;
        for a in &self.cells {
            let pa = crate::geometry::clip_convex(&a.vertices, &win);
            if pa.is_empty() {
                continue;
            }
            let bb = bbox(&pa);
            for bi in other.index.candidates_bbox(&bb) {
                let b = &other.cells[bi as usize];
                let dv = (a.value - b.value).abs();
                if dv == 0.0 {
                    continue;
                }
                total += dv * intersection_area(&pa, &b.vertices);
            }
        }
        total
    }

    /// Extend constantly outward by `margin`: every boundary side is
    /// extruded into a strip carrying its cell value, corners are filled
    /// with the corner cell's value. The result tiles domain.dilate(margin).
    pub fn extend_constant(&self, margin: f64) -> Result<PiecewisePoly2> {
        if margin <= 0.0 {
            return Err(Error::Domain("margin must be positive".into()));
        }
        let d = self.domain;
        let tol = 1e-12 * d.max_extent().max(1.0);
        let mut cells = self.cells.clone();
        let boundary_lines = [
            (Point::new(0.0, -1.0), -d.y0), // y = y0, outward -y
            (Point::new(1.0, 0.0), d.x1),   // x = x1, outward +x
            (Point::new(0.0, 1.0), d.y1),   // y = y1, outward +y
            (Point::new(-1.0, 0.0), -d.x0), // x = x0, outward -x
        ];
        for cell in &self.cells {
            let n = cell.vertices.len();
            for i in 0..n {
                let p = cell.vertices[i];
                let q = cell.vertices[(i + 1) % n];
                for (out, c) in boundary_lines {
                    if (p.dot(out) - c).abs() <= tol && (q.dot(out) - c).abs() <= tol {
                        let m = out.scale(margin);
                        cells.push(Cell {
                            vertices: vec![p, p.add(m), q.add(m), q],
                            value: cell.value,
                        });
                    }
                }
            }
        }
        // corner squares
        let inset = 1e-7 * d.max_extent();
        let corner_dirs = [
            (Point::new(d.x0, d.y0), Point::new(-1.0, -1.0)),
            (Point::new(d.x1, d.y0), Point::new(1.0, -1.0)),
            (Point::new(d.x1, d.y1), Point::new(1.0, 1.0)),
            (Point::new(d.x0, d.y1), Point::new(-1.0, 1.0)),
        ];
        for (corner, dir) in corner_dirs {
            let probe = corner.add(dir.scale(-inset));
            let (value, _) = self.value_near(probe)?;
            let far = corner.add(dir.scale(margin));
            let r = Rect::new(
                corner.x.min(far.x),
                corner.y.min(far.y),
                corner.x.max(far.x),
                corner.y.max(far.y),
            );
            cells.push(Cell {
                vertices: r.to_polygon(),
                value,
            });
        }
        PiecewisePoly2::new(d.dilate(margin), cells)
    }
}

fn bbox(poly: &[Point]) -> Rect {
    let mut r = Rect::new(f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in poly {
        r.x0 = r.x0.min(p.x);
        r.y0 = r.y0.min(p.y);
        r.x1 = r.x1.max(p.x);
        r.y1 = r.y1.max(p.y);
    }
    r
}

fn bbox_disjoint(a: &[Point], b: &[Point]) -> bool {
    let ra = bbox(a);
    let rb = bbox(b);
    ra.x1 < rb.x0 || rb.x1 < ra.x0 || ra.y1 < rb.y0 || rb.y1 < ra.y0
}

/// Uniform bucket index over cell bounding boxes.
#[derive(Debug, Clone)]
struct CellIndex {
    nx: usize,
    ny: usize,
    rect: Rect,
    buckets: Vec<Vec<u32>>,
}

impl CellIndex {
    fn build(domain: &Rect, cells: &[Cell]) -> Self {
        let n = ((cells.len() as f64).sqrt().ceil() as usize * 2).clamp(1, 256);
        let mut idx = CellIndex {
            nx: n,
            ny: n,
            rect: *domain,
            buckets: vec![Vec::new(); n * n],
        };
        // widen slightly so points on the domain boundary always map inside
        let pad = 1e-9 * domain.max_extent().max(1.0);
        idx.rect = domain.dilate(pad);
        for (ci, c) in cells.iter().enumerate() {
            let bb = bbox(&c.vertices);
            let (i0, j0) = idx.bucket_of(Point::new(bb.x0, bb.y0));
            let (i1, j1) = idx.bucket_of(Point::new(bb.x1, bb.y1));
            for i in i0..=i1 {
                for j in j0..=j1 {
                    idx.buckets[i * idx.ny + j].push(ci as u32);
                }
            }
        }
        idx
    }

    fn bucket_of(&self, p: Point) -> (usize, usize) {
        let fx = (p.x - self.rect.x0) / self.rect.width();
        let fy = (p.y - self.rect.y0) / self.rect.height();
        let i = ((fx * self.nx as f64) as isize).clamp(0, self.nx as isize - 1) as usize;
        let j = ((fy * self.ny as f64) as isize).clamp(0, self.ny as isize - 1) as usize;
        (i, j)
    }

    fn candidates(&self, p: Point) -> &[u32] {
        let (i, j) = self.bucket_of(p);
        &self.buckets[i * self.ny + j]
    }

    fn candidates_bbox(&self, bb: &Rect) -> Vec<u32> {
        let (i0, j0) = self.bucket_of(Point::new(bb.x0, bb.y0));
        let (i1, j1) = self.bucket_of(Point::new(bb.x1, bb.y1));
        let mut out = Vec::new();
        for i in i0..=i1 {
            for j in j0..=j1 {
                out.extend_from_slice(&self.buckets[i * self.ny + j]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Derive shared edges by grouping cell sides by their supporting line and
/// matching collinear overlaps between different cells.
fn derive_edges(domain: &Rect, cells: &[Cell]) -> Vec<Edge> {
    let scale = domain.max_extent().max(1.0);
    let tol = 1e-12 * scale;
    let quantum = 1e-9 * scale;

    struct Side {
        cell: usize,
        p: Point,
        q: Point,
    }
    let mut groups: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut sides = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        let n = cell.vertices.len();
        for i in 0..n {
            let p = cell.vertices[i];
            let q = cell.vertices[(i + 1) % n];
            if p.dist(q) <= tol {
                continue;
            }
            sides.push(Side { cell: ci, p, q });
        }
    }
    for (si, s) in sides.iter().enumerate() {
        let mut dir = s.q.sub(s.p).normalize();
        if dir.x < -1e-12 || (dir.x.abs() <= 1e-12 && dir.y < 0.0) {
            dir = dir.scale(-1.0);
        }
        let normal = Point::new(-dir.y, dir.x);
        let offset = normal.dot(s.p);
        let angle = dir.y.atan2(dir.x);
        let key = ((angle / 1e-9).round() as i64, (offset / quantum).round() as i64);
        // insert into the home bucket; neighbor buckets are searched on query
        groups.entry(key).or_default().push(si);
    }

    let mut edges = Vec::new();
    let mut seen: HashMap<(i64, i64), ()> = HashMap::new();
    for (&key, members) in &groups {
        // gather this bucket together with its 8 quantization neighbors
        let mut pool: Vec<usize> = Vec::new();
        for da in -1..=1 {
            for doff in -1..=1 {
                if let Some(v) = groups.get(&(key.0 + da, key.1 + doff)) {
                    pool.extend_from_slice(v);
                }
            }
        }
        let _ = members;
        if seen.insert(key, ()).is_some() {
            continue;
        }
        for (a_pos, &ia) in pool.iter().enumerate() {
            for &ib in pool.iter().skip(a_pos + 1) {
                let (sa, sb) = (&sides[ia], &sides[ib]);
                if sa.cell == sb.cell {
                    continue;
                }
                if let Some((p0, p1)) = collinear_overlap(sa.p, sa.q, sb.p, sb.q, tol) {
                    let (a, b, pa, qa) = if sa.cell < sb.cell {
                        (sa.cell, sb.cell, sa.p, sa.q)
                    } else {
                        (sb.cell, sa.cell, sb.p, sb.q)
                    };
                    let dir = qa.sub(pa).normalize();
                    let normal = dir.outward_normal_dir();
                    edges.push(Edge {
                        cell_a: a,
                        cell_b: b,
                        p0,
                        p1,
                        normal,
                        length: p0.dist(p1),
                    });
                }
            }
        }
    }
    // duplicates can arise when neighbor buckets were pooled from both sides
    edges.sort_by(|x, y| {
        (x.cell_a, x.cell_b)
            .cmp(&(y.cell_a, y.cell_b))
            .then(x.p0.x.total_cmp(&y.p0.x))
            .then(x.p0.y.total_cmp(&y.p0.y))
            .then(x.p1.x.total_cmp(&y.p1.x))
            .then(x.p1.y.total_cmp(&y.p1.y))
    });
    edges.dedup_by(|x, y| {
        x.cell_a == y.cell_a
            && x.cell_b == y.cell_b
            && x.p0.dist(y.p0) <= tol
            && x.p1.dist(y.p1) <= tol
    });
    edges
}

/// Ready-made partitions used across the pipelines and tests.
pub mod fixtures {
    use super::*;

    /// Split `domain` by the half-plane dot(p, n) <= c.
    pub fn half_plane_split(domain: Rect, n: Point, c: f64, v_le: f64, v_gt: f64) -> PiecewisePoly2 {
        let poly = domain.to_polygon();
        let lo = clip_half_plane(&poly, n, c);
        let hi = clip_half_plane(&poly, n.scale(-1.0), -c);
        PiecewisePoly2::new(
            domain,
            vec![
                Cell {
                    vertices: lo,
                    value: v_le,
                },
                Cell {
                    vertices: hi,
                    value: v_gt,
                },
            ],
        )
        .expect("half-plane split is a valid partition")
    }

    /// Vertical interface at x = split.
    pub fn axis_jump(domain: Rect, split: f64, v_left: f64, v_right: f64) -> PiecewisePoly2 {
        half_plane_split(domain, Point::new(1.0, 0.0), split, v_left, v_right)
    }

    /// Interface along the 45-degree diagonal through `anchor`.
    /// Values below / above the line y = x + (anchor.y - anchor.x).
    pub fn diagonal_jump(domain: Rect, anchor: Point, v_below: f64, v_above: f64) -> PiecewisePoly2 {
        let n = Point::new(-1.0, 1.0).normalize(); // dot(p,n) = (y-x)/sqrt2
        let c = n.dot(anchor);
        half_plane_split(domain, n.scale(-1.0), -c, v_above, v_below)
    }

    /// Three cells meeting at a T on [0,1.5]x[0,1]: bottom value 3,
    /// top-left 0, top-right 1. Shared lengths: (0,1) on 0.5, (1,3) on 0.5,
    /// (0,3) on 1.
    pub fn t_junction() -> PiecewisePoly2 {
        let domain = Rect::new(0.0, 0.0, 1.5, 1.0);
        PiecewisePoly2::new(
            domain,
            vec![
                Cell {
                    vertices: Rect::new(0.0, 0.0, 1.5, 0.5).to_polygon(),
                    value: 3.0,
                },
                Cell {
                    vertices: Rect::new(0.0, 0.5, 1.0, 1.0).to_polygon(),
                    value: 0.0,
                },
                Cell {
                    vertices: Rect::new(1.0, 0.5, 1.5, 1.0).to_polygon(),
                    value: 1.0,
                },
            ],
        )
        .expect("t-junction partition is valid")
    }

    /// Partition produced by repeated straight cuts through random interior
    /// points; values sampled uniformly. Deterministic in `seed`.
    pub fn random_partition(domain: Rect, n_cells: usize, seed: u64) -> PiecewisePoly2 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut polys = vec![domain.to_polygon()];
        while polys.len() < n_cells {
            // split the cell with the largest area
            let (k, _) = polys
                .iter()
                .enumerate()
                .map(|(k, p)| (k, polygon_area(p)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            let poly = polys.swap_remove(k);
            let bb = super::bbox(&poly);
            let cx = bb.x0 + rng.gen_range(0.3..0.7) * bb.width();
            let cy = bb.y0 + rng.gen_range(0.3..0.7) * bb.height();
            let ang: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let n = Point::new(ang.cos(), ang.sin());
            let c = n.dot(Point::new(cx, cy));
            let lo = clip_half_plane(&poly, n, c);
            let hi = clip_half_plane(&poly, n.scale(-1.0), -c);
            let min_area = 1e-6 * domain.area();
            if polygon_area(&lo).abs() < min_area || polygon_area(&hi).abs() < min_area {
                polys.push(poly);
                continue;
            }
            polys.push(lo);
            polys.push(hi);
        }
        let cells = polys
            .into_iter()
            .map(|vertices| Cell {
                vertices,
                value: rng.gen_range(-2.0..2.0),
            })
            .collect();
        PiecewisePoly2::new(domain, cells).expect("random split partition is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn pc1_lookup_and_jumps() {
        let u = PiecewisePoly1::new((0.0, 1.0), vec![0.25, 0.5], vec![1.0, -1.0, 2.0]).unwrap();
        assert_eq!(u.value_at(0.1), 1.0);
        assert_eq!(u.value_at(0.3), -1.0);
        assert_eq!(u.value_at(0.9), 2.0);
        let j = u.jumps();
        assert_eq!(j.len(), 2);
        assert!((j[0].1 + 2.0).abs() < 1e-15);
        assert!((j[1].1 - 3.0).abs() < 1e-15);
    }

    #[test]
    fn axis_jump_edges() {
        let u = axis_jump(Rect::new(0.0, 0.0, 1.0, 1.0), 0.5, 0.0, 1.0);
        assert!(u.validate().is_empty());
        let jumps: Vec<&Edge> = u.edges().iter().filter(|e| e.jump(&u) > 0.0).collect();
        assert_eq!(jumps.len(), 1);
        assert!((jumps[0].length - 1.0).abs() < 1e-12);
        // normal from cell 0 (left) into cell 1 (right)
        assert!((jumps[0].normal.x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn t_junction_edge_lengths() {
        let u = t_junction();
        assert!(u.validate().is_empty());
        let mut lens: Vec<(f64, f64)> = u
            .edges()
            .iter()
            .map(|e| (e.jump(&u), e.length))
            .collect();
        lens.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        assert_eq!(lens.len(), 3);
        assert!((lens[0].0 - 1.0).abs() < 1e-12 && (lens[0].1 - 0.5).abs() < 1e-12);
        assert!((lens[1].0 - 2.0).abs() < 1e-12 && (lens[1].1 - 0.5).abs() < 1e-12);
        assert!((lens[2].0 - 3.0).abs() < 1e-12 && (lens[2].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn value_lookup_with_boundary_detection() {
        let u = axis_jump(Rect::new(0.0, 0.0, 1.0, 1.0), 0.5, 0.0, 1.0);
        assert_eq!(u.value_at(Point::new(0.25, 0.5)).unwrap(), 0.0);
        assert_eq!(u.value_at(Point::new(0.75, 0.5)).unwrap(), 1.0);
        assert!(u.value_at(Point::new(0.5, 0.5)).is_err());
        assert!(u.value_at(Point::new(2.0, 0.5)).is_err());
    }

    #[test]
    fn extend_constant_tiles_margin() {
        let u = t_junction();
        let v = u.extend_constant(0.25).unwrap();
        assert!(v.validate().is_empty(), "{:?}", v.validate());
        // far outside the original domain, values come from the nearest cell
        assert_eq!(v.value_at(Point::new(-0.2, 0.25)).unwrap(), 3.0);
        assert_eq!(v.value_at(Point::new(0.5, 1.2)).unwrap(), 0.0);
        assert_eq!(v.value_at(Point::new(1.4, 1.2)).unwrap(), 1.0);
    }

    #[test]
    fn random_partition_valid_and_l1_self_distance() {
        let u = random_partition(Rect::new(0.0, 0.0, 1.0, 1.0), 6, 42);
        assert!(u.validate().is_empty(), "{:?}", u.validate());
        assert_eq!(u.cells.len(), 6);
        let d = u.l1_distance(&u, &Rect::new(0.0, 0.0, 1.0, 1.0));
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn l1_distance_between_shifted_jumps() {
        let dom = Rect::new(0.0, 0.0, 1.0, 1.0);
        let u = axis_jump(dom, 0.5, 0.0, 1.0);
        let v = axis_jump(dom, 0.6, 0.0, 1.0);
        let d = u.l1_distance(&v, &dom);
        assert!((d - 0.1).abs() < 1e-12, "d = {d}");
    }

    #[test]
    fn partition_json_roundtrip() {
        let dir = std::env::temp_dir().join("gamma_pm_pc_test");
        std::fs::create_dir_all(&dir).unwrap();
        let u = t_junction();
        let p = dir.join("part.json");
        u.save_json(&p).unwrap();
        let back = PiecewisePoly2::load_json(&p).unwrap();
        assert_eq!(back.cells.len(), 3);
        assert_eq!(back.edges().len(), 3);
    }
}
