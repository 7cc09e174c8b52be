//! Builds the Schwarz rearrangement u* of a solution on a star-shaped domain
//! and measures the L1 distance between u and the best translate of u*.
//! The distance is tiny for near-disks and grows with the asymmetry.

use plapsym::geometry::{build_boundary, domain_eps, DomainSpec};
use plapsym::levelset::{l1_distance, schwarz_rearrangement};
use plapsym::mesh::triangulate;
use plapsym::solver::{solve, Nonlinearity, SolverConfig};

fn main() {
    let f = Nonlinearity::constant(1.0);
    println!(
        "{:<18} {:>12} {:>12} {:>22}",
        "domain", "eps", "L1(u, u*)", "optimal center"
    );
    for (name, spec) in [
        ("star(1, 0.01, 5)", DomainSpec::star(1.0, 0.01, 5)),
        ("star(1, 0.05, 5)", DomainSpec::star(1.0, 0.05, 5)),
        ("star(1, 0.10, 5)", DomainSpec::star(1.0, 0.10, 5)),
        ("ellipse(1.3, 1/1.3)", DomainSpec::ellipse(1.3, 1.0 / 1.3)),
    ] {
        let curve = build_boundary(&spec).unwrap();
        let mesh = triangulate(&curve, 0.06).unwrap();
        let (field, _) = solve(&mesh, &f, &SolverConfig::with_p(2.0)).unwrap();
        let profile = schwarz_rearrangement(&mesh, &field, 256);
        let l1 = l1_distance(&mesh, &field, &profile).unwrap();
        let geom = domain_eps(&curve);
        println!(
            "{name:<18} {:>12.4e} {:>12.4e}      ({:>7.4}, {:>7.4})",
            geom.eps, l1.distance, l1.x0.x, l1.x0.y
        );
    }
}
