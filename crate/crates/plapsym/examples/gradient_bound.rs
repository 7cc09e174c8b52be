//! The P-function argument gives an explicit a priori bound on sup |grad u|.
//! This example evaluates the bound on a convex and a nonconvex domain and
//! locates the maximizer of the P-function, which should sit at (or flow to)
//! a critical point of u.

use plapsym::geometry::{build_boundary, domain_eps, DomainSpec};
use plapsym::mesh::triangulate;
use plapsym::solver::{gradient_bound_check, solve, Nonlinearity, SolverConfig};

fn main() {
    let f = Nonlinearity::constant(1.0);
    for (name, spec, p) in [
        ("disk(1), p=2", DomainSpec::disk(1.0), 2.0),
        ("disk(1), p=3", DomainSpec::disk(1.0), 3.0),
        ("star(1, 0.05, 5), p=2", DomainSpec::star(1.0, 0.05, 5), 2.0),
    ] {
        let curve = build_boundary(&spec).unwrap();
        let mesh = triangulate(&curve, 0.05).unwrap();
        let (field, _) = solve(&mesh, &f, &SolverConfig::with_p(p)).unwrap();
        let geom = domain_eps(&curve);
        let gb = gradient_bound_check(&mesh, &field, &f, p, geom.m0_minus);
        println!("{name}");
        println!("  observed sup |grad u|   {:.4}", gb.observed_grad_sup);
        println!("  a priori bound          {:.4}", gb.bound);
        println!("  curvature term M0^-     {:.4} (beta = {:.4})", geom.m0_minus, gb.beta);
        println!(
            "  P argmax ({:.3}, {:.3}), {:.4} from the nearest critical point{}",
            gb.p_argmax.x,
            gb.p_argmax.y,
            gb.dist_to_critical,
            if gb.satisfied { "" } else { "   BOUND VIOLATED" }
        );
        println!();
    }
}
