//! Numerical check of the Pohozaev identity on the unit disk with p = 2 and
//! f = 1, where both sides equal pi/4. Also demonstrates that the boundary
//! side is affine in the base point x0 with an almost-zero gradient, which is
//! why the center search in the deficit report is well posed.

use std::f64::consts::PI;

use plapsym::deficits::pohozaev_residual;
use plapsym::geometry::{build_boundary, DomainSpec};
use plapsym::mesh::triangulate;
use plapsym::solver::{solve, Nonlinearity, SolverConfig};
use plapsym::vec2::vec2;

fn main() {
    let f = Nonlinearity::constant(1.0);
    let curve = build_boundary(&DomainSpec::disk(1.0)).unwrap();
    let mesh = triangulate(&curve, 0.05).unwrap();
    let (field, _) = solve(&mesh, &f, &SolverConfig::with_p(2.0)).unwrap();

    let rep = pohozaev_residual(&mesh, &field, &f, 2.0, vec2(0.0, 0.0));
    println!("target             {:.6}", PI / 4.0);
    println!("volume side        {:.6}", rep.lhs);
    println!("boundary side      {:.6}", rep.rhs);
    println!("residual           {:.3e}", rep.resid);
    println!(
        "d(rhs)/d(x0)       ({:.3e}, {:.3e})   near zero on a symmetric domain",
        rep.rhs_gradient[0], rep.rhs_gradient[1]
    );

    println!("\nboundary side as the base point moves along the diagonal:");
    for s in [-0.5, -0.25, 0.0, 0.25, 0.5] {
        let r = pohozaev_residual(&mesh, &field, &f, 2.0, vec2(s, s));
        println!("  x0 = ({s:>5.2}, {s:>5.2})   rhs = {:.8}", r.rhs);
    }
}
