//! Finite element solver for the degenerate quasilinear Dirichlet problem
//!
//!   -div(|grad u|^{p-2} grad u) = f(u) in Omega,   u = 0 on the boundary,
//!
//! with positive nondecreasing f. The scheme is a damped Picard (frozen
//! coefficient) iteration on piecewise-linear elements: each step freezes the
//! diffusion coefficient (|grad u|^2 + delta^2)^{(p-2)/2} per triangle and the
//! source f(u) per vertex, then solves the resulting symmetric positive
//! definite system by preconditioned conjugate gradients and damps the update.

use crate::mesh::Mesh;
use crate::sparse::{pcg, Csr, LinearError};
use crate::vec2::{vec2, Vec2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid nonlinearity: {0}")]
    BadNonlinearity(String),
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("linear solve failed: {0}")]
    Linear(#[from] LinearError),
    #[error(
        "Picard iteration did not converge: relative change {rel_change:.3e}, \
         weak residual {residual:.3e} after {iterations} iterations"
    )]
    NotConverged {
        iterations: usize,
        rel_change: f64,
        residual: f64,
        /// Weak residual per iteration, for post-mortems.
        history: Vec<f64>,
        /// Last iterate so callers can inspect what the solver was doing.
        last_values: Vec<f64>,
    },
    #[error("solution lost positivity: min interior value {0:.3e}")]
    LostPositivity(f64),
}

/// Right-hand side f(u): positive, nondecreasing, Lipschitz on the range used.
#[derive(Clone, Debug, PartialEq)]
pub enum Nonlinearity {
    Constant { c: f64 },
    Affine { c0: f64, c1: f64 },
    /// Piecewise-linear interpolation of (s, f(s)) samples; constant
    /// extrapolation beyond the sampled range.
    Table { s: Vec<f64>, f: Vec<f64> },
}

impl Nonlinearity {
    pub fn constant(c: f64) -> Self {
        Nonlinearity::Constant { c }
    }

    pub fn affine(c0: f64, c1: f64) -> Self {
        Nonlinearity::Affine { c0, c1 }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::BadNonlinearity(m));
        match self {
            Nonlinearity::Constant { c } => {
                if !(*c > 0.0) {
                    return bad(format!("constant source {c} must be positive"));
                }
            }
            Nonlinearity::Affine { c0, c1 } => {
                if !(*c0 > 0.0) {
                    return bad(format!("affine source offset {c0} must be positive"));
                }
                if !(*c1 >= 0.0) {
                    return bad(format!("affine source slope {c1} must be nonnegative"));
                }
            }
            Nonlinearity::Table { s, f } => {
                if s.len() != f.len() || s.len() < 2 {
                    return bad("table needs at least two (s, f) samples".into());
                }
                if s.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("table abscissae must be strictly increasing".into());
                }
                if f.iter().any(|v| !(*v > 0.0)) {
                    return bad("table values must be positive".into());
                }
                if f.windows(2).any(|w| w[1] < w[0]) {
                    return bad("table values must be nondecreasing".into());
                }
                if !(s[0] >= 0.0) {
                    return bad("table abscissae must start at s >= 0".into());
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Constant { c } => *c,
            Nonlinearity::Affine { c0, c1 } => c0 + c1 * u,
            Nonlinearity::Table { s, f } => {
                if u <= s[0] {
                    return f[0];
                }
                if u >= s[s.len() - 1] {
                    return f[f.len() - 1];
                }
                let k = s.partition_point(|&si| si <= u) - 1;
                let lam = (u - s[k]) / (s[k + 1] - s[k]);
                f[k] + lam * (f[k + 1] - f[k])
            }
        }
    }

    /// F(u) = integral of f from 0 to u, exact for each representation.
    pub fn antiderivative(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Constant { c } => c * u,
            Nonlinearity::Affine { c0, c1 } => c0 * u + 0.5 * c1 * u * u,
            Nonlinearity::Table { s, f } => {
                // trapezoid over knots is exact for a piecewise-linear f
                let mut acc = 0.0;
                let mut prev_s = 0.0;
                let mut prev_f = f[0];
                for (si, fi) in s.iter().zip(f.iter()) {
                    if *si >= u {
                        break;
                    }
                    if *si > prev_s {
                        acc += 0.5 * (prev_f + fi) * (si - prev_s);
                    }
                    prev_s = *si;
                    prev_f = *fi;
                }
                if u > prev_s {
                    acc += 0.5 * (prev_f + self.eval(u)) * (u - prev_s);
                }
                acc
            }
        }
    }

    /// Positive lower bound of f near zero; for nondecreasing f this is f(0).
    pub fn phi0(&self) -> f64 {
        self.eval(0.0)
    }

    /// sup of f on [0, m]; for nondecreasing f this is f(m).
    pub fn sup_on(&self, m: f64) -> f64 {
        self.eval(m)
    }

    /// Lipschitz constant of f on [0, m].
    pub fn lipschitz_on(&self, m: f64) -> f64 {
        match self {
            Nonlinearity::Constant { .. } => 0.0,
            Nonlinearity::Affine { c1, .. } => *c1,
            Nonlinearity::Table { s, f } => {
                let mut l = 0.0f64;
                for w in s.windows(2).zip(f.windows(2)) {
                    let (sw, fw) = w;
                    if sw[0] > m {
                        break;
                    }
                    l = l.max((fw[1] - fw[0]).abs() / (sw[1] - sw[0]));
                }
                l
            }
        }
    }

    /// Growth ratio sup f / inf f on [0, m]. A nondecreasing f admits a
    /// nonincreasing minorant phi with phi <= f <= c * phi exactly when this
    /// ratio is at most c (take phi constant between f(m)/c and f(0)).
    pub fn growth_ratio(&self, m: f64) -> f64 {
        self.sup_on(m) / self.phi0()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub p: f64,
    /// Gradient regularization; zero selects 1e-6 * (estimated max / diameter).
    pub delta_reg: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub cg_tol: f64,
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            p: 2.0,
            delta_reg: 0.0,
            picard_tol: 1e-8,
            picard_max: 200,
            cg_tol: 1e-12,
            damping: 0.7,
        }
    }
}

impl SolverConfig {
    pub fn with_p(p: f64) -> Self {
        SolverConfig {
            p,
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.p > 1.0) {
            return Err(SolverError::BadConfig(format!("p = {} must exceed 1", self.p)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SolverError::BadConfig(format!(
                "damping = {} must lie in (0, 1]",
                self.damping
            )));
        }
        if !(self.picard_tol > 0.0 && self.cg_tol > 0.0) {
            return Err(SolverError::BadConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Converged discrete solution: vertex values and the piecewise-constant
/// gradient, one 2-vector per triangle. Pairs with the mesh it was solved on.
#[derive(Clone, Debug)]
pub struct Field {
    pub values: Vec<f64>,
    pub gradients: Vec<Vec2>,
}

impl Field {
    pub fn from_values(mesh: &Mesh, values: Vec<f64>) -> Field {
        let gradients = compute_gradients(mesh, &values);
        Field { values, gradients }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn grad_sup(&self) -> f64 {
        self.gradients.iter().map(|g| g.norm()).fold(0.0, f64::max)
    }

    /// Serializes as one value per line, mesh vertex order.
    pub fn write_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 20);
        for v in &self.values {
            out.push_str(&format!("{v}\n"));
        }
        out
    }

    pub fn read_text(mesh: &Mesh, text: &str) -> Option<Field> {
        let values: Option<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse().ok())
            .collect();
        let values = values?;
        (values.len() == mesh.vertices.len()).then(|| Field::from_values(mesh, values))
    }
}

#[derive(Clone, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    /// Relative weak residual after each Picard step.
    pub residual_history: Vec<f64>,
    pub delta_reg: f64,
    pub rel_change: f64,
}

/// Gradients of the three P1 basis functions on a counterclockwise triangle.
fn basis_gradients(p: [Vec2; 3]) -> ([Vec2; 3], f64) {
    let area2 = (p[1] - p[0]).cross(p[2] - p[0]);
    let g = [
        vec2(p[1].y - p[2].y, p[2].x - p[1].x) / area2,
        vec2(p[2].y - p[0].y, p[0].x - p[2].x) / area2,
        vec2(p[0].y - p[1].y, p[1].x - p[0].x) / area2,
    ];
    (g, 0.5 * area2)
}

fn compute_gradients(mesh: &Mesh, values: &[f64]) -> Vec<Vec2> {
    mesh.triangles
        .iter()
        .map(|tri| {
            let p = [
                mesh.vertices[tri[0]],
                mesh.vertices[tri[1]],
                mesh.vertices[tri[2]],
            ];
            let (g, _) = basis_gradients(p);
            g[0] * values[tri[0]] + g[1] * values[tri[1]] + g[2] * values[tri[2]]
        })
        .collect()
}

/// Assembles the stiffness matrix with per-triangle coefficient `coeff` and
/// the consistent load vector for the P1 source field `source`, with
/// homogeneous Dirichlet rows reduced to the identity.
fn assemble(
    mesh: &Mesh,
    coeff: &[f64],
    source: &[f64],
) -> (Csr, Vec<f64>) {
    let n = mesh.vertices.len();
    let mut triplets = Vec::with_capacity(mesh.triangles.len() * 9);
    let mut b = vec![0.0; n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = [
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ];
        let (g, area) = basis_gradients(p);
        let a_t = coeff[t] * area;
        for i in 0..3 {
            let vi = tri[i];
            if mesh.boundary[vi] {
                continue;
            }
            for j in 0..3 {
                let vj = tri[j];
                // Dirichlet columns carry u = 0, so dropping them is exact
                if mesh.boundary[vj] {
                    continue;
                }
                triplets.push((vi, vj, a_t * g[i].dot(g[j])));
            }
            // consistent P1 mass: row weights (2, 1, 1) * area / 12
            let m = area / 12.0;
            b[vi] += m
                * (2.0 * source[tri[i]]
                    + source[tri[(i + 1) % 3]]
                    + source[tri[(i + 2) % 3]]);
        }
    }
    for v in 0..n {
        if mesh.boundary[v] {
            triplets.push((v, v, 1.0));
            b[v] = 0.0;
        }
    }
    (Csr::from_triplets(n, &triplets), b)
}

fn diffusion_coeff(mesh: &Mesh, values: &[f64], p: f64, delta: f64) -> Vec<f64> {
    compute_gradients(mesh, values)
        .iter()
        .map(|g| (g.norm_sq() + delta * delta).powf(0.5 * (p - 2.0)))
        .collect()
}

/// Relative norm of the assembled weak residual K(u) u - b(u) over interior
/// vertices, with coefficient and source both evaluated at u itself.
fn weak_residual(mesh: &Mesh, values: &[f64], f: &Nonlinearity, p: f64, delta: f64) -> f64 {
    let coeff = diffusion_coeff(mesh, values, p, delta);
    let source: Vec<f64> = values.iter().map(|&u| f.eval(u)).collect();
    let (k, b) = assemble(mesh, &coeff, &source);
    let mut ku = vec![0.0; values.len()];
    k.matvec(values, &mut ku);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..values.len() {
        if !mesh.boundary[i] {
            num += (ku[i] - b[i]) * (ku[i] - b[i]);
            den += b[i] * b[i];
        }
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Solves the Dirichlet problem on `mesh`. Returns the converged field and
/// iteration statistics.
pub fn solve(
    mesh: &Mesh,
    f: &Nonlinearity,
    cfg: &SolverConfig,
) -> Result<(Field, SolveStats), SolverError> {
    f.validate()?;
    cfg.validate()?;
    let n = mesh.vertices.len();
    let p = cfg.p;

    // initial iterate: Laplacian solve with the constant source phi0
    let phi0 = f.phi0();
    let ones = vec![1.0; mesh.triangles.len()];
    let src0 = vec![phi0; n];
    let (k0, b0) = assemble(mesh, &ones, &src0);
    let mut u = vec![0.0; n];
    pcg(&k0, &b0, &mut u, cfg.cg_tol, 40 * n)?;

    let m_est = u.iter().cloned().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let (lo, hi) = mesh.bbox();
    let diameter = (hi - lo).norm();
    let delta = if cfg.delta_reg > 0.0 {
        cfg.delta_reg
    } else {
        1e-6 * m_est / diameter
    };

    let mut history = Vec::new();
    let mut rel_change = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut damping = cfg.damping;
    let mut best_res = f64::INFINITY;
    for it in 0..cfg.picard_max {
        iterations = it + 1;
        let coeff = diffusion_coeff(mesh, &u, p, delta);
        let source: Vec<f64> = u.iter().map(|&v| f.eval(v)).collect();
        let (k, b) = assemble(mesh, &coeff, &source);
        let mut v = u.clone();
        pcg(&k, &b, &mut v, cfg.cg_tol, 40 * n)?;
        let mut diff2 = 0.0;
        let mut norm2 = 0.0;
        for i in 0..n {
            let next = u[i] + damping * (v[i] - u[i]);
            diff2 += (next - u[i]) * (next - u[i]);
            norm2 += next * next;
            u[i] = next;
        }
        rel_change = (diff2 / norm2.max(f64::MIN_POSITIVE)).sqrt();
        let res = weak_residual(mesh, &u, f, p, delta);
        history.push(res);
        if rel_change <= cfg.picard_tol && res <= 10.0 * cfg.picard_tol {
            converged = true;
            break;
        }
        // strongly degenerate problems can trap a fixed step in a limit
        // cycle; shrink the step whenever the residual stops improving
        if res < best_res {
            best_res = res;
        } else {
            damping = (damping * 0.5).max(0.02);
        }
    }
    if !converged {
        let residual = *history.last().unwrap_or(&f64::INFINITY);
        return Err(SolverError::NotConverged {
            iterations,
            rel_change,
            residual,
            history,
            last_values: u,
        });
    }

    let m = u.iter().cloned().fold(0.0f64, f64::max);
    let min_interior = u
        .iter()
        .enumerate()
        .filter(|(i, _)| !mesh.boundary[*i])
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    if min_interior < -1e-12 * m.max(1.0) {
        return Err(SolverError::LostPositivity(min_interior));
    }

    Ok((
        Field::from_values(mesh, u),
        SolveStats {
            iterations,
            residual_history: history,
            delta_reg: delta,
            rel_change,
        },
    ))
}

// ---------------------------------------------------------------------------
// closed-form radial solution for constant source on a ball
// ---------------------------------------------------------------------------

/// Solution of the constant-source problem on a centered ball of radius `r`
/// in dimension `n`: u(rad) = ((p-1)/p) (c/n)^{1/(p-1)} (r^{p'} - rad^{p'}).
#[derive(Clone, Copy, Debug)]
pub struct RadialSolution {
    pub p: f64,
    pub n: f64,
    pub r: f64,
    pub c: f64,
}

pub fn radial_oracle(p: f64, n: u32, r: f64, c: f64) -> RadialSolution {
    assert!(p > 1.0 && n >= 2 && r > 0.0 && c > 0.0);
    RadialSolution {
        p,
        n: n as f64,
        r,
        c,
    }
}

impl RadialSolution {
    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn value(&self, rad: f64) -> f64 {
        let pc = self.p_conj();
        (self.p - 1.0) / self.p
            * (self.c / self.n).powf(1.0 / (self.p - 1.0))
            * (self.r.powf(pc) - rad.abs().powf(pc))
    }

    pub fn grad_mag(&self, rad: f64) -> f64 {
        (self.c * rad.abs() / self.n).powf(1.0 / (self.p - 1.0))
    }

    pub fn max(&self) -> f64 {
        self.value(0.0)
    }

    /// Radius of the level set {u = t}, the inverse of `value`.
    pub fn level_radius(&self, t: f64) -> f64 {
        let pc = self.p_conj();
        let scale = (self.p - 1.0) / self.p * (self.c / self.n).powf(1.0 / (self.p - 1.0));
        (self.r.powf(pc) - t / scale).max(0.0).powf(1.0 / pc)
    }
}

// ---------------------------------------------------------------------------
// gradient bound diagnostic
// ---------------------------------------------------------------------------

/// Maximum-principle style check on the auxiliary function
/// P = (1/p') |grad u|^p - (F(M) - F(u)) + beta (u - M),
/// which is maximized near critical points of u for smooth solutions.
#[derive(Clone, Debug)]
pub struct GradientBound {
    pub observed_grad_sup: f64,
    /// Explicit a priori bound on the gradient sup norm: (M sup f + M beta)^{1/p}.
    pub bound: f64,
    pub beta: f64,
    pub max_u: f64,
    pub p_max: f64,
    pub p_argmax: Vec2,
    /// Distance from the argmax of P to the triangle of minimal |grad u|.
    pub dist_to_critical: f64,
    pub argmax_near_critical: bool,
    pub satisfied: bool,
}

pub fn gradient_bound_check(
    mesh: &Mesh,
    field: &Field,
    f: &Nonlinearity,
    p: f64,
    m0_minus: f64,
) -> GradientBound {
    let p_conj = p / (p - 1.0);
    let m = field.max();
    let boundary_grad_sup = mesh
        .boundary_edges
        .iter()
        .map(|e| field.gradients[e.tri].norm())
        .fold(0.0f64, f64::max);
    let beta = m0_minus * boundary_grad_sup.powf(p - 1.0) + 1.0;
    let f_m = f.antiderivative(m);

    let mut p_max = f64::NEG_INFINITY;
    let mut p_argmax = Vec2::ZERO;
    let mut grad_min = f64::INFINITY;
    let mut grad_argmin = Vec2::ZERO;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let u_t = (field.values[tri[0]] + field.values[tri[1]] + field.values[tri[2]]) / 3.0;
        let g = field.gradients[t].norm();
        let p_val = g.powf(p) / p_conj - (f_m - f.antiderivative(u_t)) + beta * (u_t - m);
        let centroid = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]])
            / 3.0;
        if p_val > p_max {
            p_max = p_val;
            p_argmax = centroid;
        }
        if g < grad_min {
            grad_min = g;
            grad_argmin = centroid;
        }
    }
    let observed = field.grad_sup();
    let bound = (m * f.sup_on(m) + m * beta).powf(1.0 / p);
    let dist = p_argmax.dist(grad_argmin);
    GradientBound {
        observed_grad_sup: observed,
        bound,
        beta,
        max_u: m,
        p_max,
        p_argmax,
        dist_to_critical: dist,
        argmax_near_critical: dist <= 2.0 * mesh.h,
        satisfied: observed <= bound * (1.0 + 1e-8),
    }
}
