//! Level-set structure of the solution: level curves, distribution functions,
//! the Schwarz rearrangement, the L1 distance to it, and the measure of the
//! near-critical set.
//!
//! Everything here is built from two exact operations on P1 fields: clipping a
//! triangle against a level (polygonal super-level regions, hence mu and the
//! source integrals) and intersecting a level with a triangle (polyline level
//! curves, hence surface measure and the boundary integrals of |grad u| powers).

use crate::geometry::{clip_triangle_above_vals, ClipPoly};
use crate::mesh::Mesh;
use crate::optim::NelderMead;
use crate::solver::{Field, Nonlinearity};
use crate::vec2::{vec2, Vec2};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LevelError {
    #[error("level t = {t} outside the value range (0, {m})")]
    OutOfRange { t: f64, m: f64 },
    #[error("empty level set at interior level t = {t}; the discrete solution is disconnected")]
    EmptyLevel { t: f64 },
    #[error("level grid needs at least 2 levels, got {0}")]
    BadGrid(usize),
    #[error(
        "L1 center search did not converge: best distance {distance:.6e} at ({x:.4}, {y:.4})"
    )]
    L1NotConverged { distance: f64, x: f64, y: f64 },
}

/// One straight piece of a level curve, with the gradient magnitude of the
/// triangle it came from.
#[derive(Clone, Copy, Debug)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
    pub grad_mag: f64,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.a.dist(self.b)
    }
}

#[derive(Clone, Debug)]
pub struct LevelSet {
    pub t: f64,
    pub segments: Vec<Segment>,
    pub length: f64,
}

/// Intersection of the level {interpolant = t} with one triangle, if the
/// level crosses it transversally.
fn tri_level_segment(tri: [Vec2; 3], vals: [f64; 3], t: f64) -> Option<(Vec2, Vec2)> {
    let mut pts = [Vec2::ZERO; 3];
    let mut n = 0;
    for i in 0..3 {
        let j = (i + 1) % 3;
        let (vi, vj) = (vals[i] - t, vals[j] - t);
        if (vi > 0.0) != (vj > 0.0) {
            let lam = (vi / (vi - vj)).clamp(0.0, 1.0);
            pts[n] = tri[i] + (tri[j] - tri[i]) * lam;
            n += 1;
        }
    }
    (n == 2 && pts[0].dist(pts[1]) > 0.0).then(|| (pts[0], pts[1]))
}

/// Marching-triangles extraction of the level curve {u = t}.
pub fn extract_level(mesh: &Mesh, field: &Field, t: f64) -> Result<LevelSet, LevelError> {
    let m = field.max();
    if !(t > 0.0 && t < m) {
        return Err(LevelError::OutOfRange { t, m });
    }
    let mut segments = Vec::new();
    let mut length = 0.0;
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let pts = [
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ];
        let vals = [
            field.values[tri[0]],
            field.values[tri[1]],
            field.values[tri[2]],
        ];
        if let Some((a, b)) = tri_level_segment(pts, vals, t) {
            let s = Segment {
                a,
                b,
                grad_mag: field.gradients[ti].norm(),
            };
            length += s.len();
            segments.push(s);
        }
    }
    Ok(LevelSet {
        t,
        segments,
        length,
    })
}

/// All per-level distribution quantities on a uniform level grid.
#[derive(Clone, Debug)]
pub struct DistributionTables {
    pub p: f64,
    /// Level grid, strictly inside (0, M).
    pub t: Vec<f64>,
    /// mu(t) = |{u > t}|, by exact triangle clipping.
    pub mu: Vec<f64>,
    /// H1({u = t}).
    pub surf: Vec<f64>,
    /// I(t) = integral of f(u) over {u > t}.
    pub i_int: Vec<f64>,
    /// K(t) = I^{p'} mu^{(p-N)/(N(p-1))} with N = 2.
    pub k_fn: Vec<f64>,
    /// Boundary integral of |grad u|^{p-1} over {u = t}.
    pub int_grad_pm1: Vec<f64>,
    /// Boundary integral of |grad u|^{-1} over {u = t}, floored (see below).
    pub int_grad_inv: Vec<f64>,
    /// beta_t = (mean 1/|grad u|)^{1/p'} / (mean |grad u|^{p-1})^{1/(p(p-1))}.
    pub beta: Vec<f64>,
    /// Length-averaged |1/|grad u| - beta_t| per level.
    pub dev_abs: Vec<f64>,
    /// Relative mismatch of the flux balance I(t) = int |grad u|^{p-1} dH1.
    pub gg_mismatch: Vec<f64>,
    /// Length fraction of each level where the |grad u| floor was applied.
    pub clamped_fraction: Vec<f64>,
    pub m_max: f64,
    pub area: f64,
    /// Integral of f(u) over the whole domain, the t -> 0 limit of I.
    pub int_f_omega: f64,
    /// K(0-) = (int f(u))^{p'} |Omega|^{(p-N)/(N(p-1))}.
    pub k_zero: f64,
}

/// Integral of f(u) over a clipped polygon with the P1 values at its corners,
/// by fan triangulation and the edge-midpoint rule on each fan triangle.
fn integrate_f_on_clip(poly: &ClipPoly, vals: &[f64; 4], f: &Nonlinearity) -> f64 {
    let mut acc = 0.0;
    for k in 1..poly.n.saturating_sub(1) {
        let (a, b, c) = (poly.pts[0], poly.pts[k], poly.pts[k + 1]);
        let (ua, ub, uc) = (vals[0], vals[k], vals[k + 1]);
        let area = 0.5 * (b - a).cross(c - a);
        acc += area / 3.0
            * (f.eval(0.5 * (ua + ub)) + f.eval(0.5 * (ub + uc)) + f.eval(0.5 * (uc + ua)));
    }
    acc
}

struct LevelRow {
    mu: f64,
    surf: f64,
    i_int: f64,
    int_grad_pm1: f64,
    int_grad_inv: f64,
    clamped_len: f64,
    beta: f64,
    dev_abs: f64,
}

fn level_row(mesh: &Mesh, field: &Field, f: &Nonlinearity, t: f64, p: f64, floor: f64) -> LevelRow {
    let mut row = LevelRow {
        mu: 0.0,
        surf: 0.0,
        i_int: 0.0,
        int_grad_pm1: 0.0,
        int_grad_inv: 0.0,
        clamped_len: 0.0,
        beta: f64::NAN,
        dev_abs: f64::NAN,
    };
    let mut segs: Vec<(f64, f64)> = Vec::new();
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let pts = [
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ];
        let vals = [
            field.values[tri[0]],
            field.values[tri[1]],
            field.values[tri[2]],
        ];
        let (clip, cvals) = clip_triangle_above_vals(pts, vals, t);
        if clip.n >= 3 {
            row.mu += clip.area();
            row.i_int += integrate_f_on_clip(&clip, &cvals, f);
        }
        if let Some((a, b)) = tri_level_segment(pts, vals, t) {
            let len = a.dist(b);
            let g = field.gradients[ti].norm().max(floor);
            if g <= floor {
                row.clamped_len += len;
            }
            row.surf += len;
            row.int_grad_pm1 += len * g.powf(p - 1.0);
            row.int_grad_inv += len / g;
            segs.push((len, g));
        }
    }
    if row.surf > 0.0 {
        let p_conj = p / (p - 1.0);
        let mean_inv = row.int_grad_inv / row.surf;
        let mean_pm1 = row.int_grad_pm1 / row.surf;
        row.beta = mean_inv.powf(1.0 / p_conj) / mean_pm1.powf(1.0 / (p * (p - 1.0)));
        row.dev_abs = segs
            .iter()
            .map(|&(len, g)| len * (1.0 / g - row.beta).abs())
            .sum::<f64>()
            / row.surf;
    }
    row
}

/// Fills the distribution tables on `n_levels` uniform levels spanning
/// [0.02 M, 0.98 M]. The outermost 2% bands are excluded because discrete
/// level extraction degenerates at the extrema.
pub fn distribution_tables(
    mesh: &Mesh,
    field: &Field,
    f: &Nonlinearity,
    p: f64,
    n_levels: usize,
) -> Result<DistributionTables, LevelError> {
    if n_levels < 2 {
        return Err(LevelError::BadGrid(n_levels));
    }
    let m = field.max();
    let t: Vec<f64> = (0..n_levels)
        .map(|i| m * (0.02 + 0.96 * i as f64 / (n_levels - 1) as f64))
        .collect();
    // floor for 1/|grad u|: the near-critical set has vanishing measure, so
    // flooring at a tiny multiple of the sup only regularizes roundoff levels
    let floor = 1e-8 * field.grad_sup();

    let rows: Vec<LevelRow> = t
        .par_iter()
        .map(|&ti| level_row(mesh, field, f, ti, p, floor))
        .collect();

    for (ti, row) in t.iter().zip(&rows) {
        if row.surf == 0.0 || row.mu == 0.0 {
            return Err(LevelError::EmptyLevel { t: *ti });
        }
    }

    let p_conj = p / (p - 1.0);
    let area = mesh.area();
    let int_f_omega = mesh.integrate_p1(&field.values, |u| f.eval(u));
    let k_exp = (p - 2.0) / (2.0 * (p - 1.0));
    let mut tables = DistributionTables {
        p,
        t,
        mu: Vec::new(),
        surf: Vec::new(),
        i_int: Vec::new(),
        k_fn: Vec::new(),
        int_grad_pm1: Vec::new(),
        int_grad_inv: Vec::new(),
        beta: Vec::new(),
        dev_abs: Vec::new(),
        gg_mismatch: Vec::new(),
        clamped_fraction: Vec::new(),
        m_max: m,
        area,
        int_f_omega,
        k_zero: int_f_omega.powf(p_conj) * area.powf(k_exp),
    };
    for row in rows {
        tables.mu.push(row.mu);
        tables.surf.push(row.surf);
        tables.i_int.push(row.i_int);
        tables.k_fn.push(row.i_int.powf(p_conj) * row.mu.powf(k_exp));
        tables.int_grad_pm1.push(row.int_grad_pm1);
        tables.int_grad_inv.push(row.int_grad_inv);
        tables.beta.push(row.beta);
        tables.dev_abs.push(row.dev_abs);
        tables
            .gg_mismatch
            .push((row.i_int - row.int_grad_pm1).abs() / row.i_int.max(f64::MIN_POSITIVE));
        tables.clamped_fraction.push(row.clamped_len / row.surf);
    }
    Ok(tables)
}

impl DistributionTables {
    /// CSV with the fixed header "t,mu,surf,I,K,int_grad_pm1,int_grad_inv,beta".
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mu,surf,I,K,int_grad_pm1,int_grad_inv,beta\n");
        for i in 0..self.t.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.t[i],
                self.mu[i],
                self.surf[i],
                self.i_int[i],
                self.k_fn[i],
                self.int_grad_pm1[i],
                self.int_grad_inv[i],
                self.beta[i]
            ));
        }
        out
    }
}

/// Integral over [0, m] of samples `y` on the interior grid `t`: trapezoid on
/// the grid plus linearly extrapolated end panels covering [0, t[0]] and
/// [t[last], m].
pub fn integrate_levels(t: &[f64], y: &[f64], m: f64) -> f64 {
    assert!(t.len() == y.len() && t.len() >= 2);
    let n = t.len();
    let mut acc = 0.0;
    for i in 0..n - 1 {
        acc += 0.5 * (y[i] + y[i + 1]) * (t[i + 1] - t[i]);
    }
    let y_at_0 = y[0] - (y[1] - y[0]) / (t[1] - t[0]) * t[0];
    let y_at_m = y[n - 1] + (y[n - 1] - y[n - 2]) / (t[n - 1] - t[n - 2]) * (m - t[n - 1]);
    acc += 0.5 * (y_at_0 + y[0]) * t[0];
    acc += 0.5 * (y_at_m + y[n - 1]) * (m - t[n - 1]);
    acc
}

/// Coarea closure: integral over all levels of int_{u=t} |grad u|^{-1} dH1,
/// which must reproduce |Omega| up to the measure of the critical set.
pub fn coarea_closure(tables: &DistributionTables) -> f64 {
    integrate_levels(&tables.t, &tables.int_grad_inv, tables.m_max)
}

// ---------------------------------------------------------------------------
// Schwarz rearrangement
// ---------------------------------------------------------------------------

/// Radial decreasing profile of the Schwarz rearrangement u*: level t maps to
/// the radius r*(t) of the ball with volume mu(t).
#[derive(Clone, Debug)]
pub struct RadialProfile {
    /// Ascending levels, starting at 0 and ending at M.
    pub ts: Vec<f64>,
    /// Ball volumes mu(t), strictly decreasing along `ts`, ending at 0.
    pub mus: Vec<f64>,
    pub m: f64,
}

/// Builds the rearrangement profile by sampling mu on `n_levels` levels from
/// 0 to M inclusive. mu is made strictly decreasing by an infinitesimal
/// tie-break so that inversion is single-valued.
pub fn schwarz_rearrangement(mesh: &Mesh, field: &Field, n_levels: usize) -> RadialProfile {
    let m = field.max();
    let n = n_levels.max(8);
    let ts: Vec<f64> = (0..=n).map(|i| m * i as f64 / n as f64).collect();
    let mut mus: Vec<f64> = ts
        .par_iter()
        .map(|&t| {
            let mut mu = 0.0;
            for tri in &mesh.triangles {
                let pts = [
                    mesh.vertices[tri[0]],
                    mesh.vertices[tri[1]],
                    mesh.vertices[tri[2]],
                ];
                let vals = [
                    field.values[tri[0]],
                    field.values[tri[1]],
                    field.values[tri[2]],
                ];
                let (clip, _) = clip_triangle_above_vals(pts, vals, t);
                if clip.n >= 3 {
                    mu += clip.area();
                }
            }
            mu
        })
        .collect();
    let jitter = 1e-14 * mus[0].max(1.0);
    for i in 1..mus.len() {
        let cap = mus[i - 1] - jitter;
        if mus[i] > cap {
            mus[i] = cap.max(0.0);
        }
    }
    let last = mus.len() - 1;
    mus[last] = 0.0;
    RadialProfile { ts, mus, m }
}

impl RadialProfile {
    /// Radius of the support, r*(0).
    pub fn support_radius(&self) -> f64 {
        (self.mus[0] / std::f64::consts::PI).sqrt()
    }

    /// r*(t) = sqrt(mu(t) / pi), interpolating mu linearly between levels.
    pub fn radius_of_level(&self, t: f64) -> f64 {
        (self.mu_of_level(t) / std::f64::consts::PI).sqrt()
    }

    pub fn mu_of_level(&self, t: f64) -> f64 {
        if t <= self.ts[0] {
            return self.mus[0];
        }
        if t >= self.m {
            return 0.0;
        }
        let k = self.ts.partition_point(|&x| x <= t) - 1;
        let lam = (t - self.ts[k]) / (self.ts[k + 1] - self.ts[k]);
        self.mus[k] + lam * (self.mus[k + 1] - self.mus[k])
    }

    /// u*(x) for |x| = radius: the monotone inverse of mu at pi radius^2.
    pub fn value(&self, radius: f64) -> f64 {
        let a = std::f64::consts::PI * radius * radius;
        if a >= self.mus[0] {
            return 0.0;
        }
        // mus is strictly decreasing: find the bracketing panel
        let k = self.mus.partition_point(|&mu| mu > a) - 1;
        let k = k.min(self.mus.len() - 2);
        let lam = (self.mus[k] - a) / (self.mus[k] - self.mus[k + 1]);
        self.ts[k] + lam * (self.ts[k + 1] - self.ts[k])
    }

    /// Dirichlet energy of u*: integral of |grad u*|^p over the plane. u* is
    /// affine in the ball volume between levels, so each annulus integrates in
    /// closed form.
    pub fn dirichlet_energy(&self, p: f64) -> f64 {
        use std::f64::consts::PI;
        let mut acc = 0.0;
        for k in 0..self.ts.len() - 1 {
            let (mu_hi, mu_lo) = (self.mus[k], self.mus[k + 1]);
            let dt = self.ts[k + 1] - self.ts[k];
            if dt <= 0.0 || mu_hi <= mu_lo {
                continue;
            }
            // u* = a - s * pi r^2 with s = dt / (mu_hi - mu_lo), so
            // |grad u*| = 2 pi s r on the annulus r in [r_lo, r_hi]
            let s = dt / (mu_hi - mu_lo);
            let r_hi = (mu_hi / PI).sqrt();
            let r_lo = (mu_lo / PI).sqrt();
            let c = (2.0 * PI * s).powf(p);
            acc += c * 2.0 * PI * (r_hi.powf(p + 2.0) - r_lo.powf(p + 2.0)) / (p + 2.0);
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// L1 distance to the rearrangement
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct L1Result {
    /// min over x0 of the integral of |u(x) - u*(x + x0)| over the plane.
    pub distance: f64,
    /// Minimizing shift; the rearranged ball is centered at -x0.
    pub x0: Vec2,
    pub grid_spacing: f64,
}

/// Quadrature grid for the L1 functional: midpoints at spacing h/2 covering
/// the mesh bounding box padded by one diameter, with u sampled once.
struct L1Grid {
    points: Vec<Vec2>,
    u: Vec<f64>,
    cell_area: f64,
    spacing: f64,
}

fn build_l1_grid(mesh: &Mesh, field: &Field) -> L1Grid {
    let (lo, hi) = mesh.bbox();
    let diam = (hi - lo).norm();
    let s = 0.5 * mesh.h;
    let lo = lo - vec2(diam, diam);
    let hi = hi + vec2(diam, diam);
    let nx = ((hi.x - lo.x) / s).ceil() as usize;
    let ny = ((hi.y - lo.y) / s).ceil() as usize;
    let loc = mesh.locator();
    let points: Vec<Vec2> = (0..nx * ny)
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            vec2(
                lo.x + (i as f64 + 0.5) * s,
                lo.y + (j as f64 + 0.5) * s,
            )
        })
        .collect();
    let u: Vec<f64> = points
        .par_iter()
        .map(|&p| loc.eval(mesh, &field.values, p))
        .collect();
    L1Grid {
        points,
        u,
        cell_area: s * s,
        spacing: s,
    }
}

fn l1_objective(grid: &L1Grid, profile: &RadialProfile, x0: Vec2) -> f64 {
    let r0 = profile.support_radius();
    let mut acc = 0.0;
    for (p, &u) in grid.points.iter().zip(&grid.u) {
        let r = (*p + x0).norm();
        if u == 0.0 && r >= r0 {
            continue;
        }
        acc += (u - profile.value(r)).abs();
    }
    acc * grid.cell_area
}

/// Minimal L1 distance between u and its rearrangement over all recenterings.
pub fn l1_distance(
    mesh: &Mesh,
    field: &Field,
    profile: &RadialProfile,
) -> Result<L1Result, LevelError> {
    let grid = build_l1_grid(mesh, field);
    // u* (centered at -x0) should sit on the domain; start at minus the centroid
    let mut centroid = Vec2::ZERO;
    let mut area = 0.0;
    for t in 0..mesh.triangles.len() {
        let a = mesh.tri_area(t);
        let [i, j, k] = mesh.triangles[t];
        centroid += (mesh.vertices[i] + mesh.vertices[j] + mesh.vertices[k]) * (a / 3.0);
        area += a;
    }
    centroid = centroid / area;
    let (lo, hi) = mesh.bbox();
    let diam = (hi - lo).norm();
    let nm = NelderMead {
        tol: 1e-8,
        max_iter: 600,
        init_scale: mesh.h.max(1e-6),
        bounds: Some((
            [-centroid.x - diam, -centroid.y - diam],
            [-centroid.x + diam, -centroid.y + diam],
        )),
    };
    let r = nm.minimize(|x0| l1_objective(&grid, profile, x0), -centroid);
    if !r.converged {
        return Err(LevelError::L1NotConverged {
            distance: r.value,
            x: r.x.x,
            y: r.x.y,
        });
    }
    Ok(L1Result {
        distance: r.value,
        x0: r.x,
        grid_spacing: grid.spacing,
    })
}

// ---------------------------------------------------------------------------
// near-critical set measure
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct CriticalMeasure {
    pub sigma: Vec<f64>,
    /// M_u(sigma) = |{ |grad u| <= sigma }|.
    pub measure: Vec<f64>,
    /// Least-squares slope of log M_u against log sigma over the usable rows.
    pub slope: f64,
    pub log_c: f64,
    /// Rows that entered the fit (20 h^2 < M_u < 95% of |Omega|).
    pub fitted: usize,
}

/// Vertex-recovered gradient magnitude: area-weighted average of the incident
/// triangle gradients. The P1 interpolant of this field resolves sub-triangle
/// structure of {|grad u| <= sigma} that the raw piecewise-constant gradient
/// cannot.
pub fn recovered_gradient_magnitude(mesh: &Mesh, field: &Field) -> Vec<f64> {
    let mut acc = vec![0.0f64; mesh.vertices.len()];
    let mut wsum = vec![0.0f64; mesh.vertices.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = mesh.tri_area(t);
        let g = field.gradients[t].norm();
        for &v in tri {
            acc[v] += a * g;
            wsum[v] += a;
        }
    }
    for (a, w) in acc.iter_mut().zip(&wsum) {
        *a /= w.max(f64::MIN_POSITIVE);
    }
    acc
}

/// Measure of the near-critical set for each sigma, with a log-log power fit.
pub fn critical_measure(mesh: &Mesh, field: &Field, sigma: &[f64]) -> CriticalMeasure {
    let gm = recovered_gradient_magnitude(mesh, field);
    let area = mesh.area();
    let measure: Vec<f64> = sigma
        .par_iter()
        .map(|&s| {
            let mut below = 0.0;
            for (t, tri) in mesh.triangles.iter().enumerate() {
                let pts = [
                    mesh.vertices[tri[0]],
                    mesh.vertices[tri[1]],
                    mesh.vertices[tri[2]],
                ];
                let vals = [gm[tri[0]], gm[tri[1]], gm[tri[2]]];
                let (clip, _) = clip_triangle_above_vals(pts, vals, s);
                let above = if clip.n >= 3 { clip.area() } else { 0.0 };
                below += mesh.tri_area(t) - above;
            }
            below
        })
        .collect();

    // power-law fit on the resolvable window: a set smaller than a few
    // triangles is quadrature noise, and near-full sets saturate
    let h_est = mesh.boundary_edges.iter().map(|e| e.len).sum::<f64>()
        / mesh.boundary_edges.len().max(1) as f64;
    let floor = 20.0 * h_est * h_est;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&s, &m) in sigma.iter().zip(&measure) {
        if m > floor && m < 0.95 * area && s > 0.0 {
            xs.push(s.ln());
            ys.push(m.ln());
        }
    }
    let (slope, log_c) = if xs.len() >= 2 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let b = sxy / sxx.max(f64::MIN_POSITIVE);
        (b, my - b * mx)
    } else {
        (f64::NAN, f64::NAN)
    };
    CriticalMeasure {
        sigma: sigma.to_vec(),
        measure,
        slope,
        log_c,
        fitted: xs.len(),
    }
}
