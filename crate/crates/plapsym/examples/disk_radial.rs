//! Solves -div(|grad u|^{p-2} grad u) = 1 on the unit disk and compares the
//! discrete solution against the closed-form radial answer
//!
//!   u(r) = (p-1)/p * (1/2)^{1/(p-1)} * (1 - r^{p/(p-1)})
//!
//! for several p, printing the max-norm error and iteration counts.

use plapsym::geometry::{build_boundary, DomainSpec};
use plapsym::mesh::triangulate;
use plapsym::solver::{solve, Nonlinearity, SolverConfig};

fn exact(p: f64, r: f64) -> f64 {
    let pc = p / (p - 1.0);
    (p - 1.0) / p * 0.5f64.powf(1.0 / (p - 1.0)) * (1.0 - r.powf(pc))
}

fn main() {
    let curve = build_boundary(&DomainSpec::disk(1.0)).unwrap();
    let mesh = triangulate(&curve, 0.05).unwrap();
    let f = Nonlinearity::constant(1.0);
    println!(
        "unit disk, {} vertices / {} triangles",
        mesh.vertices.len(),
        mesh.triangles.len()
    );
    println!("{:>5} {:>12} {:>12} {:>8} {:>10}", "p", "max |err|", "max u", "iters", "delta");
    for p in [1.3, 1.5, 2.0, 2.5, 3.0, 4.0] {
        let (field, stats) = solve(&mesh, &f, &SolverConfig::with_p(p)).unwrap();
        let err = mesh
            .vertices
            .iter()
            .zip(&field.values)
            .map(|(v, &u)| (u - exact(p, v.norm())).abs())
            .fold(0.0f64, f64::max);
        println!(
            "{p:>5} {err:>12.3e} {:>12.6} {:>8} {:>10.2e}",
            field.max(),
            stats.iterations,
            stats.delta_reg
        );
    }
}
