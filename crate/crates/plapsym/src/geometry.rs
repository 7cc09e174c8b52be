//! Planar C2 domains and the boundary-geometric quantities feeding the deficits.
//!
//! Domains are parametric closed curves sampled uniformly in the parameter.
//! On a smooth closed curve the uniform (periodic trapezoid) rule is spectrally
//! accurate, so perimeter, enclosed area and centroid computed here are far
//! more accurate than anything the downstream mesh resolves.

use crate::mesh::Mesh;
use crate::optim::{grid_min, NelderMead};
use crate::vec2::{segments_intersect, vec2, Vec2};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid domain parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("curve simplicity check failed: {0}")]
    NotSimple(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Disk { r: f64 },
    Ellipse { a: f64, b: f64 },
    /// Polar perturbation r(theta) = r * (1 + amp * cos(k * theta)).
    Star { r: f64, amp: f64, k: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainSpec {
    pub shape: Shape,
    pub center: Vec2,
    pub n_boundary: usize,
}

pub const DEFAULT_BOUNDARY_POINTS: usize = 256;

impl DomainSpec {
    pub fn disk(r: f64) -> Self {
        DomainSpec {
            shape: Shape::Disk { r },
            center: Vec2::ZERO,
            n_boundary: DEFAULT_BOUNDARY_POINTS,
        }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        DomainSpec {
            shape: Shape::Ellipse { a, b },
            center: Vec2::ZERO,
            n_boundary: DEFAULT_BOUNDARY_POINTS,
        }
    }

    pub fn star(r: f64, amp: f64, k: u32) -> Self {
        DomainSpec {
            shape: Shape::Star { r, amp, k },
            center: Vec2::ZERO,
            n_boundary: DEFAULT_BOUNDARY_POINTS,
        }
    }

    pub fn with_center(mut self, center: Vec2) -> Self {
        self.center = center;
        self
    }

    pub fn with_boundary_points(mut self, n: usize) -> Self {
        self.n_boundary = n;
        self
    }

    /// Position, first and second parameter derivatives at angle `theta`.
    fn sample(&self, theta: f64) -> (Vec2, Vec2, Vec2) {
        let (c, s) = (theta.cos(), theta.sin());
        match self.shape {
            Shape::Disk { r } => (
                self.center + vec2(r * c, r * s),
                vec2(-r * s, r * c),
                vec2(-r * c, -r * s),
            ),
            Shape::Ellipse { a, b } => (
                self.center + vec2(a * c, b * s),
                vec2(-a * s, b * c),
                vec2(-a * c, -b * s),
            ),
            Shape::Star { r, amp, k } => {
                let kf = k as f64;
                let rho = r * (1.0 + amp * (kf * theta).cos());
                let rho_d = -r * amp * kf * (kf * theta).sin();
                let rho_dd = -r * amp * kf * kf * (kf * theta).cos();
                let e = vec2(c, s);
                let e_d = vec2(-s, c);
                (
                    self.center + e * rho,
                    e * rho_d + e_d * rho,
                    e * (rho_dd - rho) + e_d * (2.0 * rho_d),
                )
            }
        }
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let bad = |name: &'static str, reason: String| {
            Err(GeometryError::InvalidParameter { name, reason })
        };
        if self.n_boundary < 64 {
            return bad("n_boundary", format!("{} < 64", self.n_boundary));
        }
        match self.shape {
            Shape::Disk { r } => {
                if !(r > 0.0) {
                    return bad("r", format!("radius {r} must be positive"));
                }
            }
            Shape::Ellipse { a, b } => {
                if !(a > 0.0 && b > 0.0) {
                    return bad("a/b", format!("semi-axes ({a}, {b}) must be positive"));
                }
            }
            Shape::Star { r, amp, k } => {
                if !(r > 0.0) {
                    return bad("r", format!("radius {r} must be positive"));
                }
                if k == 0 {
                    return bad("k", "wave number must be >= 1".into());
                }
                if !(amp.abs() < 1.0) {
                    return Err(GeometryError::NotSimple(format!(
                        "radial factor 1 + {amp} cos(k theta) vanishes; the curve degenerates"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Oriented (counterclockwise) boundary sampling with outward normals,
/// signed curvature and arc-length quadrature weights.
#[derive(Clone, Debug)]
pub struct BoundaryCurve {
    pub points: Vec<Vec2>,
    /// Unit outward normals at the sample points.
    pub normals: Vec<Vec2>,
    /// Signed curvature; positive where the curve bends like a convex boundary.
    pub curvature: Vec<f64>,
    /// Arc-length weights of the periodic trapezoid rule; they sum to the perimeter.
    pub arc_weights: Vec<f64>,
    pub perimeter: f64,
    pub area: f64,
    pub centroid: Vec2,
}

impl BoundaryCurve {
    /// C_Omega = N |Omega| / H^{N-1}(boundary) with N = 2; equals R on a disk of radius R.
    pub fn c_omega(&self) -> f64 {
        2.0 * self.area / self.perimeter
    }

    /// Largest negative part of the boundary curvature: zero for convex domains.
    pub fn m0_minus(&self) -> f64 {
        self.curvature.iter().fold(0.0f64, |m, &k| m.max(-k))
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        let mut lo = vec2(f64::INFINITY, f64::INFINITY);
        let mut hi = vec2(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo = vec2(lo.x.min(p.x), lo.y.min(p.y));
            hi = vec2(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    pub fn diameter_bound(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }
}

/// Samples the parametric boundary and validates it.
///
/// The simplicity check is discrete by necessity: the sampled polyline must be
/// free of self-intersections and must resolve the curve (each chord subtends
/// at most half a radian of the osculating circle). A polyline that fails the
/// second condition cannot certify that the smooth curve is simple, so both
/// failures report as simplicity failures.
pub fn build_boundary(spec: &DomainSpec) -> Result<BoundaryCurve, GeometryError> {
    spec.validate()?;
    let n = spec.n_boundary;
    let dtheta = 2.0 * PI / n as f64;

    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut curvature = Vec::with_capacity(n);
    let mut arc_weights = Vec::with_capacity(n);
    let mut perimeter = 0.0;
    let mut area2 = 0.0;
    let mut cx2 = 0.0;
    let mut cy2 = 0.0;

    for i in 0..n {
        let theta = dtheta * i as f64;
        let (x, xd, xdd) = spec.sample(theta);
        let speed = xd.norm();
        if !(speed > 0.0) {
            return Err(GeometryError::NotSimple(format!(
                "stationary parametrization at theta = {theta:.6}"
            )));
        }
        points.push(x);
        // counterclockwise tangent rotated by -90 degrees points outward
        normals.push(vec2(xd.y, -xd.x) / speed);
        curvature.push(xd.cross(xdd) / (speed * speed * speed));
        arc_weights.push(speed * dtheta);
        perimeter += speed * dtheta;
        area2 += x.cross(xd) * dtheta;
        cx2 += x.x * x.x * xd.y * dtheta;
        cy2 -= x.y * x.y * xd.x * dtheta;
    }
    let area = 0.5 * area2;
    if !(area > 0.0) {
        return Err(GeometryError::NotSimple(
            "sampled boundary encloses no area".into(),
        ));
    }
    // Green's theorem first moments: Cx A = (1/2) closed-integral x^2 dy
    let centroid = vec2(cx2, cy2) / area2;

    // resolvability: chord length against local curvature radius
    for i in 0..n {
        let j = (i + 1) % n;
        let chord = points[i].dist(points[j]);
        let kmax = curvature[i].abs().max(curvature[j].abs());
        if chord * kmax > 0.5 {
            return Err(GeometryError::NotSimple(format!(
                "chord {i} subtends {:.2} rad of the osculating circle; \
                 raise n_boundary or smooth the domain",
                chord * kmax
            )));
        }
    }
    // discrete self-intersection test over non-adjacent chord pairs
    for i in 0..n {
        let i2 = (i + 1) % n;
        for j in (i + 2)..n {
            let j2 = (j + 1) % n;
            if j2 == i {
                continue;
            }
            if segments_intersect(points[i], points[i2], points[j], points[j2]) {
                return Err(GeometryError::NotSimple(format!(
                    "polyline chords {i} and {j} intersect"
                )));
            }
        }
    }

    Ok(BoundaryCurve {
        points,
        normals,
        curvature,
        arc_weights,
        perimeter,
        area,
        centroid,
    })
}

/// Relative perimeter excess over the ball of the same area; zero iff the
/// domain is a ball.
pub fn isoperimetric_deficit(curve: &BoundaryCurve) -> f64 {
    let p_ball = 2.0 * (PI * curve.area).sqrt();
    (curve.perimeter - p_ball) / p_ball
}

#[derive(Clone, Copy, Debug)]
pub struct CenterSearch {
    pub value: f64,
    pub x0: Vec2,
    pub iterations: usize,
}

/// Alignment objective at a fixed center; exposed for oracle-style testing.
pub fn normal_alignment_at(curve: &BoundaryCurve, x0: Vec2) -> f64 {
    let c = curve.c_omega();
    let mut acc = 0.0;
    for i in 0..curve.points.len() {
        acc += curve.arc_weights[i] * (c - (curve.points[i] - x0).dot(curve.normals[i])).abs();
    }
    acc
}

/// Optimal-center normal alignment term of the domain deficit:
/// inf over x0 of the boundary integral |C_Omega - <x - x0, nu>|.
pub fn normal_deficit(curve: &BoundaryCurve) -> CenterSearch {
    let diam = curve.diameter_bound();
    let nm = NelderMead {
        init_scale: 0.1 * diam,
        ..NelderMead::default()
    };
    let r = nm.minimize_with_fallback(
        |x0| normal_alignment_at(curve, x0),
        curve.centroid,
        curve.centroid,
        0.5 * diam,
        33,
    );
    CenterSearch {
        value: r.value,
        x0: r.x,
        iterations: r.iterations,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub area: f64,
    pub perimeter: f64,
    pub c_omega: f64,
    pub iso_deficit: f64,
    pub normal_deficit: f64,
    pub eps: f64,
    pub m0_minus: f64,
    pub x0_star: [f64; 2],
}

/// Full domain deficit eps = isoperimetric deficit + optimal-center alignment.
pub fn domain_eps(curve: &BoundaryCurve) -> GeometryReport {
    let iso = isoperimetric_deficit(curve);
    let nd = normal_deficit(curve);
    GeometryReport {
        area: curve.area,
        perimeter: curve.perimeter,
        c_omega: curve.c_omega(),
        iso_deficit: iso,
        normal_deficit: nd.value,
        eps: iso + nd.value,
        m0_minus: curve.m0_minus(),
        x0_star: nd.x0.to_array(),
    }
}

// ---------------------------------------------------------------------------
// region measure helpers: half-plane clips of triangles and circle clipping
// ---------------------------------------------------------------------------

/// Convex polygon with at most four vertices: a triangle clipped by one line.
#[derive(Clone, Copy, Debug)]
pub struct ClipPoly {
    pub n: usize,
    pub pts: [Vec2; 4],
}

impl ClipPoly {
    pub fn area(&self) -> f64 {
        let mut a = 0.0;
        for i in 0..self.n {
            let j = (i + 1) % self.n;
            a += self.pts[i].cross(self.pts[j]);
        }
        0.5 * a
    }

    pub fn centroid(&self) -> Vec2 {
        let mut c = Vec2::ZERO;
        let mut a = 0.0;
        for i in 0..self.n {
            let j = (i + 1) % self.n;
            let w = self.pts[i].cross(self.pts[j]);
            c += (self.pts[i] + self.pts[j]) * w;
            a += w;
        }
        if a.abs() < 1e-300 {
            self.pts[0]
        } else {
            c / (3.0 * a)
        }
    }

    pub fn points(&self) -> &[Vec2] {
        &self.pts[..self.n]
    }
}

/// Part of the triangle where the P1 interpolant of `vals` exceeds `t`.
/// Vertices exactly at the level count as not-above, which keeps adjacent
/// triangles consistent.
pub fn clip_triangle_above(tri: [Vec2; 3], vals: [f64; 3], t: f64) -> ClipPoly {
    clip_triangle_above_vals(tri, vals, t).0
}

/// Same clip, additionally carrying the interpolated field value at each clip
/// vertex (kept vertices keep their value; crossing points sit at `t`).
pub fn clip_triangle_above_vals(tri: [Vec2; 3], vals: [f64; 3], t: f64) -> (ClipPoly, [f64; 4]) {
    let mut out = ClipPoly {
        n: 0,
        pts: [Vec2::ZERO; 4],
    };
    let mut field = [0.0f64; 4];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let (vi, vj) = (vals[i] - t, vals[j] - t);
        if vi > 0.0 {
            field[out.n] = vals[i];
            out.pts[out.n] = tri[i];
            out.n += 1;
        }
        if (vi > 0.0) != (vj > 0.0) {
            let lam = (vi / (vi - vj)).clamp(0.0, 1.0);
            field[out.n] = t;
            out.pts[out.n] = tri[i] + (tri[j] - tri[i]) * lam;
            out.n += 1;
        }
        debug_assert!(out.n <= 4);
    }
    (out, field)
}

/// Area of `poly intersected with the disk of radius r about c`, exact for a
/// simple counterclockwise polygon. Green's theorem edge by edge: chords inside
/// the disk contribute triangle fans, excursions outside contribute arcs.
pub fn circle_polygon_intersection_area(poly: &[Vec2], c: Vec2, r: f64) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let r2 = r * r;
    let seg = |p: Vec2, q: Vec2| 0.5 * p.cross(q);
    let arc = |p: Vec2, q: Vec2| 0.5 * r2 * p.cross(q).atan2(p.dot(q));
    let mut total = 0.0;
    for i in 0..poly.len() {
        let a = poly[i] - c;
        let b = poly[(i + 1) % poly.len()] - c;
        let a_in = a.norm_sq() <= r2;
        let b_in = b.norm_sq() <= r2;
        if a_in && b_in {
            total += seg(a, b);
            continue;
        }
        // segment-circle intersection parameters
        let d = b - a;
        let qa = d.norm_sq();
        let qb = 2.0 * a.dot(d);
        let qc = a.norm_sq() - r2;
        let disc = qb * qb - 4.0 * qa * qc;
        if qa == 0.0 || disc <= 0.0 {
            total += arc(a, b);
            continue;
        }
        let sq = disc.sqrt();
        let t1 = (-qb - sq) / (2.0 * qa);
        let t2 = (-qb + sq) / (2.0 * qa);
        match (a_in, b_in) {
            (true, false) => {
                let t = t2.clamp(0.0, 1.0);
                let q = a + d * t;
                total += seg(a, q) + arc(q, b);
            }
            (false, true) => {
                let t = t1.clamp(0.0, 1.0);
                let p = a + d * t;
                total += arc(a, p) + seg(p, b);
            }
            (false, false) => {
                if t1 > 0.0 && t2 < 1.0 && t1 < t2 {
                    let p = a + d * t1;
                    let q = a + d * t2;
                    total += arc(a, p) + seg(p, q) + arc(q, b);
                } else {
                    total += arc(a, b);
                }
            }
            (true, true) => unreachable!(),
        }
    }
    total
}

// ---------------------------------------------------------------------------
// ball matching of super-level regions
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct BallMatch {
    /// |region symmetric-difference ball| at the optimal center.
    pub sym_diff: f64,
    pub center: Vec2,
    pub region_area: f64,
}

/// Mesh-resolved super-level region {u > t} as clipped triangle polygons.
pub fn super_level_region(mesh: &Mesh, values: &[f64], t: f64) -> (Vec<ClipPoly>, f64, Vec2) {
    let mut polys = Vec::new();
    let mut area = 0.0;
    let mut first_moment = Vec2::ZERO;
    for tri in &mesh.triangles {
        let pts = [
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ];
        let vals = [values[tri[0]], values[tri[1]], values[tri[2]]];
        let clip = clip_triangle_above(pts, vals, t);
        if clip.n >= 3 {
            let a = clip.area();
            if a > 0.0 {
                area += a;
                first_moment += clip.centroid() * a;
                polys.push(clip);
            }
        }
    }
    let centroid = if area > 0.0 {
        first_moment / area
    } else {
        Vec2::ZERO
    };
    (polys, area, centroid)
}

/// |{u > t} symmetric-difference B_r(center)| for a fixed center.
pub fn symmetric_difference_area(
    mesh: &Mesh,
    values: &[f64],
    t: f64,
    center: Vec2,
    r: f64,
) -> f64 {
    let (polys, area, _) = super_level_region(mesh, values, t);
    sym_diff_of(&polys, area, center, r)
}

fn sym_diff_of(polys: &[ClipPoly], region_area: f64, center: Vec2, r: f64) -> f64 {
    let mut inter = 0.0;
    for p in polys {
        inter += circle_polygon_intersection_area(p.points(), center, r);
    }
    region_area + PI * r * r - 2.0 * inter
}

/// Best-matching ball of radius `r` for the super-level region {u > t}:
/// minimizes the symmetric difference over the center.
pub fn ball_match(mesh: &Mesh, values: &[f64], t: f64, r: f64) -> BallMatch {
    let (polys, area, centroid) = super_level_region(mesh, values, t);
    if polys.is_empty() {
        return BallMatch {
            sym_diff: PI * r * r,
            center: centroid,
            region_area: 0.0,
        };
    }
    let (lo, hi) = mesh.bbox();
    let diam = (hi - lo).norm();
    let nm = NelderMead {
        init_scale: 0.25 * r,
        bounds: Some((
            [lo.x - diam, lo.y - diam],
            [hi.x + diam, hi.y + diam],
        )),
        ..NelderMead::default()
    };
    let mut f = |x: Vec2| sym_diff_of(&polys, area, x, r);
    let first = nm.minimize(&mut f, centroid);
    let best = if first.converged {
        first
    } else {
        let (seed, _) = grid_min(&mut f, centroid, 2.0 * r, 17);
        nm.minimize(&mut f, seed)
    };
    BallMatch {
        sym_diff: best.value.max(0.0),
        center: best.x,
        region_area: area,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn disk_curve(r: f64) -> BoundaryCurve {
        build_boundary(&DomainSpec::disk(r)).unwrap()
    }

    /// Adaptive Simpson arc length, used as an independent perimeter oracle.
    fn simpson_arclength(spec: &DomainSpec, a: f64, b: f64, tol: f64) -> f64 {
        fn speed(spec: &DomainSpec, t: f64) -> f64 {
            spec.sample(t).1.norm()
        }
        fn simpson(spec: &DomainSpec, a: f64, b: f64) -> f64 {
            (b - a) / 6.0
                * (speed(spec, a) + 4.0 * speed(spec, 0.5 * (a + b)) + speed(spec, b))
        }
        fn rec(spec: &DomainSpec, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(spec, a, m);
            let right = simpson(spec, m, b);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(spec, a, m, left, tol / 2.0, depth - 1)
                    + rec(spec, m, b, right, tol / 2.0, depth - 1)
            }
        }
        rec(spec, a, b, simpson(spec, a, b), tol, 30)
    }

    #[test]
    fn disk_curve_quantities_exact() {
        let c = disk_curve(1.0);
        assert_abs_diff_eq!(c.perimeter, 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(c.area, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(c.c_omega(), 1.0, epsilon = 1e-12);
        assert_eq!(c.m0_minus(), 0.0);
        for (i, &k) in c.curvature.iter().enumerate() {
            assert_abs_diff_eq!(k, 1.0, epsilon = 1e-12);
            let p = c.points[i];
            assert_abs_diff_eq!(c.normals[i].dot(p.normalized()), 1.0, epsilon = 1e-12);
        }
        assert!(isoperimetric_deficit(&c).abs() < 1e-12);
    }

    #[test]
    fn ellipse_perimeter_matches_adaptive_quadrature() {
        let spec = DomainSpec::ellipse(2.0, 1.0);
        let c = build_boundary(&spec).unwrap();
        let oracle = simpson_arclength(&spec, 0.0, 2.0 * PI, 1e-12);
        assert_abs_diff_eq!(c.perimeter, oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(c.area, 2.0 * PI, epsilon = 1e-9);
        // curvature extrema of an ellipse: a/b^2 at the flat ends of the
        // minor axis is the max, b/a^2 the min
        let kmax = c.curvature.iter().cloned().fold(f64::MIN, f64::max);
        let kmin = c.curvature.iter().cloned().fold(f64::MAX, f64::min);
        assert_abs_diff_eq!(kmax, 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(kmin, 0.25, epsilon = 1e-6);
        assert_eq!(c.m0_minus(), 0.0);
    }

    #[test]
    fn squashed_ellipse_keeps_unit_area() {
        let c = build_boundary(&DomainSpec::ellipse(1.2, 1.0 / 1.2)).unwrap();
        assert_abs_diff_eq!(c.area, PI, epsilon = 1e-6);
        assert!(isoperimetric_deficit(&c) > 0.0);
    }

    #[test]
    fn mild_star_is_nonconvex_with_positive_m0() {
        let c = build_boundary(&DomainSpec::star(1.0, 0.05, 5)).unwrap();
        assert!(c.m0_minus() > 0.0, "m0- = {}", c.m0_minus());
    }

    #[test]
    fn gentle_star_is_convex() {
        let c = build_boundary(&DomainSpec::star(1.0, 0.03, 4)).unwrap();
        assert_eq!(c.m0_minus(), 0.0);
    }

    #[test]
    fn wild_star_fails_simplicity() {
        let err = build_boundary(&DomainSpec::star(1.0, 0.9, 8)).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("curve simplicity check failed"), "{msg}");
    }

    #[test]
    fn centroid_tracks_translation() {
        let c = build_boundary(&DomainSpec::disk(1.0).with_center(vec2(3.0, 5.0))).unwrap();
        assert_abs_diff_eq!(c.centroid.x, 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.centroid.y, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn disk_normal_deficit_vanishes_at_center() {
        let c = disk_curve(1.0);
        let nd = normal_deficit(&c);
        assert!(nd.value <= 1e-8, "deficit = {}", nd.value);
        assert!(nd.x0.norm() < 1e-6);
    }

    #[test]
    fn translated_disk_finds_translated_center() {
        let c = build_boundary(&DomainSpec::disk(1.0).with_center(vec2(3.0, 5.0))).unwrap();
        let nd = normal_deficit(&c);
        assert!(nd.value <= 1e-8);
        assert!((nd.x0 - vec2(3.0, 5.0)).norm() < 1e-6);
        let report = domain_eps(&c);
        assert!(report.eps <= 1e-8);
    }

    #[test]
    fn normal_deficit_matches_grid_oracle_on_ellipse() {
        let c = build_boundary(&DomainSpec::ellipse(1.3, 0.8)).unwrap();
        let nd = normal_deficit(&c);
        // dense two-stage grid search as an independent oracle
        let mut f = |x: Vec2| normal_alignment_at(&c, x);
        let (mut best_x, mut best_v) = grid_min(&mut f, c.centroid, 1.0, 81);
        for shrink in [0.1, 0.01, 0.001] {
            let (x, v) = grid_min(&mut f, best_x, shrink, 41);
            if v < best_v {
                best_x = x;
                best_v = v;
            }
        }
        assert!(
            nd.value <= best_v + 1e-5,
            "descent {} vs grid {}",
            nd.value,
            best_v
        );
    }

    #[test]
    fn eps_orders_the_ellipse_family() {
        let mut prev = 0.0;
        for a in [1.05, 1.1, 1.2] {
            let c = build_boundary(&DomainSpec::ellipse(a, 1.0 / a)).unwrap();
            let eps = domain_eps(&c).eps;
            assert!(eps > prev, "eps({a}) = {eps} not increasing");
            prev = eps;
        }
    }

    #[test]
    fn circle_polygon_area_recovers_lens() {
        // big square covering the unit disk: intersection is the full disk
        let square = [
            vec2(-2.0, -2.0),
            vec2(2.0, -2.0),
            vec2(2.0, 2.0),
            vec2(-2.0, 2.0),
        ];
        assert_abs_diff_eq!(
            circle_polygon_intersection_area(&square, Vec2::ZERO, 1.0),
            PI,
            epsilon = 1e-12
        );
        // tiny triangle inside the disk: intersection is the triangle itself
        let tri = [vec2(0.0, 0.0), vec2(0.1, 0.0), vec2(0.0, 0.1)];
        assert_abs_diff_eq!(
            circle_polygon_intersection_area(&tri, Vec2::ZERO, 1.0),
            0.005,
            epsilon = 1e-14
        );
        // half-plane-like clip: square shifted so the circle sticks out
        // lens area of two unit circles at distance d:
        let d: f64 = 0.6;
        let lens = 2.0 * (d / 2.0f64).acos() - 0.5 * d * (4.0 - d * d).sqrt();
        // approximate one circle by a fine polygon and intersect with the other
        let n = 4096;
        let poly: Vec<Vec2> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                vec2(t.cos(), t.sin())
            })
            .collect();
        let got = circle_polygon_intersection_area(&poly, vec2(d, 0.0), 1.0);
        assert_abs_diff_eq!(got, lens, epsilon = 1e-5);
    }

    #[test]
    fn clip_triangle_recovers_linear_fraction() {
        let tri = [vec2(0.0, 0.0), vec2(1.0, 0.0), vec2(0.0, 1.0)];
        // u(x, y) = x: {u > 1/2} is the right corner triangle of area 1/8
        let clip = clip_triangle_above(tri, [0.0, 1.0, 0.0], 0.5);
        assert_abs_diff_eq!(clip.area(), 0.125, epsilon = 1e-14);
        // whole triangle above
        let all = clip_triangle_above(tri, [1.0, 1.0, 1.0], 0.5);
        assert_abs_diff_eq!(all.area(), 0.5, epsilon = 1e-14);
        // nothing above
        let none = clip_triangle_above(tri, [0.0, 0.0, 0.0], 0.5);
        assert_eq!(none.n, 0);
    }
}
