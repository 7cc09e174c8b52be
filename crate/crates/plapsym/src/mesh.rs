//! Triangulation of boundary curves into quality-controlled P1 meshes.
//!
//! Meshing is delegated to a constrained Delaunay triangulation with Ruppert
//! style refinement; this module owns the quality contract on top of it:
//! minimum angle at least 20 degrees, longest edge at most 1.5 h, and mesh
//! area matching the polygon area to roundoff. Failing meshes are retried
//! with a tighter area budget before giving up.

use crate::geometry::BoundaryCurve;
use crate::vec2::{vec2, Vec2};
use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
};
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid mesh spacing h = {0}; need 0 < h < domain diameter")]
    BadSpacing(f64),
    #[error("triangulation failed: {0}")]
    TriangulationFailed(String),
    #[error(
        "mesh quality not met after {attempts} attempts: min angle {min_angle_deg:.2} deg, \
         max edge {max_edge:.4} (limit {edge_limit:.4}), area error {area_err:.3e}"
    )]
    QualityFailed {
        attempts: usize,
        min_angle_deg: f64,
        max_edge: f64,
        edge_limit: f64,
        area_err: f64,
    },
    #[error("malformed mesh file: {0}")]
    BadFile(String),
}

/// Boundary edge of the mesh, oriented so the domain lies on its left.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    /// Index of the unique triangle containing this edge.
    pub tri: usize,
    pub outward: Vec2,
    pub len: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Vec2>,
    /// Counterclockwise vertex index triples.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary flag per vertex.
    pub boundary: Vec<bool>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Target spacing the mesh was built for.
    pub h: f64,
}

impl Mesh {
    pub fn tri_pts(&self, t: usize) -> [Vec2; 3] {
        let [i, j, k] = self.triangles[t];
        [self.vertices[i], self.vertices[j], self.vertices[k]]
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tri_pts(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.tri_area(t)).sum()
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        let mut lo = vec2(f64::INFINITY, f64::INFINITY);
        let mut hi = vec2(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = vec2(lo.x.min(p.x), lo.y.min(p.y));
            hi = vec2(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    pub fn max_edge(&self) -> f64 {
        let mut m = 0.0f64;
        for t in &self.triangles {
            for i in 0..3 {
                m = m.max(self.vertices[t[i]].dist(self.vertices[t[(i + 1) % 3]]));
            }
        }
        m
    }

    pub fn min_angle_deg(&self) -> f64 {
        let mut m = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.tri_pts(t);
            for i in 0..3 {
                let u = p[(i + 1) % 3] - p[i];
                let v = p[(i + 2) % 3] - p[i];
                let ang = u.cross(v).atan2(u.dot(v)).abs();
                m = m.min(ang);
            }
        }
        m.to_degrees()
    }

    /// Integral of g(u) over the domain for a P1 field u; edge-midpoint rule,
    /// exact for quadratics when g is affine.
    pub fn integrate_p1(&self, values: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for t in 0..self.triangles.len() {
            let [i, j, k] = self.triangles[t];
            let (vi, vj, vk) = (values[i], values[j], values[k]);
            let third = self.tri_area(t) / 3.0;
            acc += third
                * (g(0.5 * (vi + vj)) + g(0.5 * (vj + vk)) + g(0.5 * (vk + vi)));
        }
        acc
    }

    /// Integral of g(x, u(x)) with the same edge-midpoint rule.
    pub fn integrate_p1_xy(&self, values: &[f64], g: impl Fn(Vec2, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for t in 0..self.triangles.len() {
            let [i, j, k] = self.triangles[t];
            let p = self.tri_pts(t);
            let (vi, vj, vk) = (values[i], values[j], values[k]);
            let third = self.tri_area(t) / 3.0;
            acc += third
                * (g((p[0] + p[1]) * 0.5, 0.5 * (vi + vj))
                    + g((p[1] + p[2]) * 0.5, 0.5 * (vj + vk))
                    + g((p[2] + p[0]) * 0.5, 0.5 * (vk + vi)));
        }
        acc
    }

    pub fn interior_vertex_count(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    /// Builds a uniform-bin point locator for repeated point queries.
    pub fn locator(&self) -> Locator {
        Locator::build(self)
    }

    /// Serializes to the plain text format:
    /// header "V T", then V lines "x y flag", then T lines "i j k".
    pub fn write_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.vertices.len(), self.triangles.len());
        for (p, b) in self.vertices.iter().zip(&self.boundary) {
            let _ = writeln!(out, "{} {} {}", p.x, p.y, u8::from(*b));
        }
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        out
    }

    pub fn read_text(text: &str) -> Result<Mesh, MeshError> {
        let bad = |m: String| MeshError::BadFile(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let mut hp = header.split_whitespace();
        let nv: usize = hp
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad vertex count".into()))?;
        let nt: usize = hp
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad triangle count".into()))?;
        let mut vertices = Vec::with_capacity(nv);
        let mut boundary = Vec::with_capacity(nv);
        for i in 0..nv {
            let line = lines.next().ok_or_else(|| bad(format!("missing vertex {i}")))?;
            let mut f = line.split_whitespace();
            let x: f64 = f
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(format!("vertex {i}: bad x")))?;
            let y: f64 = f
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(format!("vertex {i}: bad y")))?;
            let flag: u8 = f
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(format!("vertex {i}: bad flag")))?;
            vertices.push(vec2(x, y));
            boundary.push(flag != 0);
        }
        let mut triangles = Vec::with_capacity(nt);
        for t in 0..nt {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("missing triangle {t}")))?;
            let mut f = line.split_whitespace();
            let mut idx = [0usize; 3];
            for slot in &mut idx {
                *slot = f
                    .next()
                    .and_then(|s| s.parse().ok())
                    .filter(|&v: &usize| v < nv)
                    .ok_or_else(|| bad(format!("triangle {t}: bad index")))?;
            }
            triangles.push(idx);
        }
        let boundary_edges = boundary_edges_of(&vertices, &triangles);
        // the file does not carry h; reconstruct a plausible value
        let mut mesh = Mesh {
            vertices,
            triangles,
            boundary,
            boundary_edges,
            h: 0.0,
        };
        mesh.h = mesh.max_edge() / 1.5;
        Ok(mesh)
    }
}

/// Uniform spatial hash over triangles: constant-time point-in-mesh queries.
#[derive(Clone, Debug)]
pub struct Locator {
    lo: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<u32>>,
}

impl Locator {
    fn build(mesh: &Mesh) -> Locator {
        let (lo, hi) = mesh.bbox();
        let cell = mesh.max_edge().max(1e-12);
        let nx = (((hi.x - lo.x) / cell).ceil() as usize).max(1);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize).max(1);
        let mut bins = vec![Vec::new(); nx * ny];
        let clamp = |v: f64, n: usize| (v.max(0.0) as usize).min(n - 1);
        for (t, _) in mesh.triangles.iter().enumerate() {
            let p = mesh.tri_pts(t);
            let (txl, txh) = (
                p[0].x.min(p[1].x).min(p[2].x),
                p[0].x.max(p[1].x).max(p[2].x),
            );
            let (tyl, tyh) = (
                p[0].y.min(p[1].y).min(p[2].y),
                p[0].y.max(p[1].y).max(p[2].y),
            );
            let i0 = clamp((txl - lo.x) / cell, nx);
            let i1 = clamp((txh - lo.x) / cell, nx);
            let j0 = clamp((tyl - lo.y) / cell, ny);
            let j1 = clamp((tyh - lo.y) / cell, ny);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    bins[j * nx + i].push(t as u32);
                }
            }
        }
        Locator {
            lo,
            cell,
            nx,
            ny,
            bins,
        }
    }

    /// Triangle containing `p` with its barycentric coordinates, if any.
    pub fn locate(&self, mesh: &Mesh, p: Vec2) -> Option<(usize, [f64; 3])> {
        let i = (p.x - self.lo.x) / self.cell;
        let j = (p.y - self.lo.y) / self.cell;
        if i < 0.0 || j < 0.0 {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        if i >= self.nx || j >= self.ny {
            return None;
        }
        for &t in &self.bins[j * self.nx + i] {
            let t = t as usize;
            let [a, b, c] = mesh.tri_pts(t);
            let area2 = (b - a).cross(c - a);
            let l0 = (b - p).cross(c - p) / area2;
            let l1 = (c - p).cross(a - p) / area2;
            let l2 = 1.0 - l0 - l1;
            let tol = -1e-12;
            if l0 >= tol && l1 >= tol && l2 >= tol {
                return Some((t, [l0, l1, l2]));
            }
        }
        None
    }

    /// P1 evaluation of a vertex field at `p`; zero outside the mesh, matching
    /// the solutions' extension by zero.
    pub fn eval(&self, mesh: &Mesh, values: &[f64], p: Vec2) -> f64 {
        match self.locate(mesh, p) {
            Some((t, l)) => {
                let [i, j, k] = mesh.triangles[t];
                l[0] * values[i] + l[1] * values[j] + l[2] * values[k]
            }
            None => 0.0,
        }
    }
}

fn boundary_edges_of(vertices: &[Vec2], triangles: &[[usize; 3]]) -> Vec<BoundaryEdge> {
    let mut count: HashMap<(usize, usize), (usize, usize, usize)> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let e = count.entry(key).or_insert((0, 0, 0));
            e.0 += 1;
            e.1 = t;
            e.2 = i;
        }
    }
    let mut edges = Vec::new();
    for &(c, t, i) in count.values() {
        if c == 1 {
            let tri = triangles[t];
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            let d = vertices[b] - vertices[a];
            let len = d.norm();
            edges.push(BoundaryEdge {
                a,
                b,
                tri: t,
                outward: vec2(d.y, -d.x) / len,
                len,
            });
        }
    }
    // deterministic order regardless of hash-map iteration
    edges.sort_by_key(|e| (e.a, e.b));
    edges
}

/// Meshes the region bounded by `curve` at target spacing `h`.
pub fn triangulate(curve: &BoundaryCurve, h: f64) -> Result<Mesh, MeshError> {
    let diam = curve.diameter_bound();
    if !(h > 0.0 && h < diam) {
        return Err(MeshError::BadSpacing(h));
    }
    // area budget such that a 20-degree triangle under it cannot have an edge
    // longer than 1.5 h; backed off further on quality failures
    let mut max_area = 0.2 * h * h;
    let mut last_failure = None;
    for attempt in 0..5 {
        let mesh = triangulate_once(curve, h, max_area)?;
        let min_angle_deg = mesh.min_angle_deg();
        let max_edge = mesh.max_edge();
        let area_err = (mesh.area() - curve.area).abs() / curve.area;
        // the polygon area differs from the smooth area by the sampling error;
        // the mesh must match the polygon, which it triangulates exactly
        let poly_area = polygon_area(&curve.points);
        let area_err_poly = (mesh.area() - poly_area).abs() / poly_area;
        if min_angle_deg >= 20.0 && max_edge <= 1.5 * h && area_err_poly <= 1e-10 {
            return Ok(mesh);
        }
        last_failure = Some(MeshError::QualityFailed {
            attempts: attempt + 1,
            min_angle_deg,
            max_edge,
            edge_limit: 1.5 * h,
            area_err: area_err.min(area_err_poly),
        });
        max_area *= 0.7;
    }
    Err(last_failure.unwrap())
}

fn polygon_area(pts: &[Vec2]) -> f64 {
    let mut a = 0.0;
    for i in 0..pts.len() {
        a += pts[i].cross(pts[(i + 1) % pts.len()]);
    }
    0.5 * a
}

fn triangulate_once(curve: &BoundaryCurve, h: f64, max_area: f64) -> Result<Mesh, MeshError> {
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let pts: Vec<Point2<f64>> = curve.points.iter().map(|p| Point2::new(p.x, p.y)).collect();
    cdt.add_constraint_edges(pts, true)
        .map_err(|e| MeshError::TriangulationFailed(format!("{e:?}")))?;
    // the default vertex budget (10x the input size) is far too small for
    // fine spacings; size it from the area the refinement has to fill
    let vertex_budget = (4.0 * curve.area / max_area).ceil() as usize + 10_000;
    let result = cdt.refine(
        RefinementParameters::<f64>::new()
            .exclude_outer_faces(true)
            .with_angle_limit(AngleLimit::from_deg(25.0))
            .with_max_allowed_area(max_area)
            .with_max_additional_vertices(vertex_budget),
    );
    if !result.refinement_complete {
        return Err(MeshError::TriangulationFailed(
            "refinement hit its vertex budget before meeting the quality targets".into(),
        ));
    }
    let excluded: HashSet<_> = result.excluded_faces.iter().copied().collect();

    let vertices: Vec<Vec2> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            vec2(p.x, p.y)
        })
        .collect();
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        let vs = face.vertices();
        let mut idx = [
            vs[0].fix().index(),
            vs[1].fix().index(),
            vs[2].fix().index(),
        ];
        let (a, b, c) = (vertices[idx[0]], vertices[idx[1]], vertices[idx[2]]);
        if (b - a).cross(c - a) < 0.0 {
            idx.swap(1, 2);
        }
        triangles.push(idx);
    }
    if triangles.is_empty() {
        return Err(MeshError::TriangulationFailed(
            "no interior triangles; is the boundary counterclockwise and closed?".into(),
        ));
    }

    // drop vertices that only belong to excluded faces
    let mut used = vec![false; vertices.len()];
    for t in &triangles {
        for &i in t {
            used[i] = true;
        }
    }
    let mut remap = vec![usize::MAX; vertices.len()];
    let mut packed = Vec::new();
    for (i, &u) in used.iter().enumerate() {
        if u {
            remap[i] = packed.len();
            packed.push(vertices[i]);
        }
    }
    for t in &mut triangles {
        for slot in t.iter_mut() {
            *slot = remap[*slot];
        }
    }

    let boundary_edges = boundary_edges_of(&packed, &triangles);
    let mut boundary = vec![false; packed.len()];
    for e in &boundary_edges {
        boundary[e.a] = true;
        boundary[e.b] = true;
    }
    Ok(Mesh {
        vertices: packed,
        triangles,
        boundary,
        boundary_edges,
        h,
    })
}
