//! How far is a domain from being a ball? Prints the isoperimetric deficit,
//! the optimal-center normal alignment term, and their sum eps for a family
//! of increasingly eccentric ellipses and wobbly stars.

use plapsym::geometry::{build_boundary, domain_eps, DomainSpec};

fn main() {
    println!(
        "{:<22} {:>12} {:>12} {:>12} {:>10}",
        "domain", "iso deficit", "normal term", "eps", "M0^-"
    );
    let show = |name: String, spec: DomainSpec| {
        let geom = domain_eps(&build_boundary(&spec).unwrap());
        println!(
            "{name:<22} {:>12.4e} {:>12.4e} {:>12.4e} {:>10.3}",
            geom.iso_deficit, geom.normal_deficit, geom.eps, geom.m0_minus
        );
    };
    show("disk(1)".into(), DomainSpec::disk(1.0));
    for a in [1.02, 1.05, 1.1, 1.2, 1.4] {
        // area-preserving stretch: b = 1/a keeps |Omega| = pi
        show(format!("ellipse({a}, 1/{a})"), DomainSpec::ellipse(a, 1.0 / a));
    }
    for amp in [0.01, 0.03, 0.08] {
        show(format!("star(1, {amp}, 5)"), DomainSpec::star(1.0, amp, 5));
    }
}
