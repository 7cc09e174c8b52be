//! Term-by-term breakdown of the integral identity that ties the level-set
//! deficits (D1, D2 weighted by W), the boundary deficits (D3, D5), and the
//! spectral isoperimetric term (D4) together. Both sides must agree up to
//! discretization error on any domain; every term vanishes on the ball.

use plapsym::deficits::deficit_report;
use plapsym::geometry::{build_boundary, DomainSpec};
use plapsym::levelset::distribution_tables;
use plapsym::mesh::triangulate;
use plapsym::solver::{solve, Nonlinearity, SolverConfig};

fn main() {
    let p = 2.0;
    let f = Nonlinearity::constant(1.0);
    for (name, spec) in [
        ("disk(1)", DomainSpec::disk(1.0)),
        ("ellipse(1.2, 1/1.2)", DomainSpec::ellipse(1.2, 1.0 / 1.2)),
        ("star(1, 0.04, 4)", DomainSpec::star(1.0, 0.04, 4)),
    ] {
        let curve = build_boundary(&spec).unwrap();
        let mesh = triangulate(&curve, 0.04).unwrap();
        let (field, _) = solve(&mesh, &f, &SolverConfig::with_p(p)).unwrap();
        let tables = distribution_tables(&mesh, &field, &f, p, 64).unwrap();
        let r = deficit_report(&mesh, &field, &tables, &curve, &f, p).unwrap();
        println!("{name}");
        println!("  level term (W, D1+D2):  {:>12.5e}", r.identity_level_term);
        println!("  boundary term (D3):     {:>12.5e}", r.identity_d3_term);
        println!("  spectral term (D4):     {:>12.5e}", r.identity_d4_term);
        println!("  center term (D5):       {:>12.5e}", r.identity_d5_term);
        println!("  lhs = {:.6e}, rhs = {:.6e}", r.identity_lhs, r.identity_rhs);
        println!(
            "  residual {:.3e} relative to scale {:.3e}\n",
            r.identity_resid, r.identity_scale
        );
    }
}
