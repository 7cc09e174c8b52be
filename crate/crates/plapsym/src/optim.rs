//! Derivative-free 2-D minimization for the optimal-center searches.
//!
//! All objectives minimized here (normal alignment, |D5|, symmetric difference,
//! L1 rearrangement distance) are convex or convex-like but not smooth, so a
//! plain Nelder-Mead simplex with an optional coarse-grid restart does the job.
//! Everything is deterministic: no randomized restarts.

use crate::vec2::{vec2, Vec2};

#[derive(Clone, Copy, Debug)]
pub struct NelderMead {
    /// Relative function-spread tolerance for termination.
    pub tol: f64,
    pub max_iter: usize,
    /// Edge length of the initial simplex.
    pub init_scale: f64,
    /// Candidate points are clamped into this box before evaluation, which keeps
    /// searches over flat or affine objectives from running away.
    pub bounds: Option<([f64; 2], [f64; 2])>,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            tol: 1e-10,
            max_iter: 500,
            init_scale: 0.1,
            bounds: None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MinResult {
    pub x: Vec2,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NelderMead {
    fn clamp(&self, p: Vec2) -> Vec2 {
        match self.bounds {
            Some((lo, hi)) => vec2(p.x.clamp(lo[0], hi[0]), p.y.clamp(lo[1], hi[1])),
            None => p,
        }
    }

    pub fn minimize<F: FnMut(Vec2) -> f64>(&self, mut f: F, start: Vec2) -> MinResult {
        let s = self.init_scale.max(1e-12);
        let mut pts = [
            self.clamp(start),
            self.clamp(start + vec2(s, 0.0)),
            self.clamp(start + vec2(0.0, s)),
        ];
        let mut vals = [f(pts[0]), f(pts[1]), f(pts[2])];

        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            iterations += 1;
            // order: best, middle, worst
            let mut idx = [0usize, 1, 2];
            idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            let (b, m, w) = (idx[0], idx[1], idx[2]);

            let spread = (vals[w] - vals[b]).abs();
            if spread <= self.tol * (1.0 + vals[b].abs()) {
                converged = true;
                break;
            }

            let centroid = (pts[b] + pts[m]) * 0.5;
            let reflect = self.clamp(centroid + (centroid - pts[w]));
            let fr = f(reflect);

            if fr < vals[b] {
                let expand = self.clamp(centroid + (centroid - pts[w]) * 2.0);
                let fe = f(expand);
                if fe < fr {
                    pts[w] = expand;
                    vals[w] = fe;
                } else {
                    pts[w] = reflect;
                    vals[w] = fr;
                }
            } else if fr < vals[m] {
                pts[w] = reflect;
                vals[w] = fr;
            } else {
                let contract = self.clamp(centroid + (pts[w] - centroid) * 0.5);
                let fc = f(contract);
                if fc < vals[w] {
                    pts[w] = contract;
                    vals[w] = fc;
                } else {
                    // shrink toward the best point
                    for i in [m, w] {
                        pts[i] = self.clamp(pts[b] + (pts[i] - pts[b]) * 0.5);
                        vals[i] = f(pts[i]);
                    }
                }
            }
        }

        let mut best = 0;
        for i in 1..3 {
            if vals[i] < vals[best] {
                best = i;
            }
        }
        MinResult {
            x: pts[best],
            value: vals[best],
            iterations,
            converged,
        }
    }

    /// Nelder-Mead with a coarse-grid restart: if the first descent does not
    /// converge, the best point of an `n x n` lattice over `center +- half_width`
    /// seeds a second descent.
    pub fn minimize_with_fallback<F: FnMut(Vec2) -> f64>(
        &self,
        mut f: F,
        start: Vec2,
        center: Vec2,
        half_width: f64,
        n: usize,
    ) -> MinResult {
        let first = self.minimize(&mut f, start);
        if first.converged {
            return first;
        }
        let (seed, _) = grid_min(&mut f, center, half_width, n);
        let second = self.minimize(&mut f, seed);
        if second.value <= first.value {
            second
        } else {
            first
        }
    }
}

/// Best point of an `n x n` lattice over the square `center +- half_width`.
pub fn grid_min<F: FnMut(Vec2) -> f64>(
    f: &mut F,
    center: Vec2,
    half_width: f64,
    n: usize,
) -> (Vec2, f64) {
    let n = n.max(2);
    let mut best = (center, f64::INFINITY);
    for i in 0..n {
        for j in 0..n {
            let x = center.x - half_width + 2.0 * half_width * (i as f64) / ((n - 1) as f64);
            let y = center.y - half_width + 2.0 * half_width * (j as f64) / ((n - 1) as f64);
            let p = vec2(x, y);
            let v = f(p);
            if v < best.1 {
                best = (p, v);
            }
        }
    }
    best
}
